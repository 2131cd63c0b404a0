#pragma once

// Serverless vs spot-instance cost arithmetic. Pure functions.

#include <string>
#include <vector>

namespace censorless::cost {

struct PricingSchedule {
    double price_per_million_requests = 0.20;
    double free_requests = 1'000'000;  // per month
    double price_per_gb_second = 0.0000166667;
    double free_gb_seconds = 400'000;  // per month
    double mb_per_request = 0.00296;
    double vps_monthly = 3.14;
    double vps_hourly = 0.004;
    double spot_hourly = 0.0383;
    double mb_per_gb = 1024;
    // Monthly free tiers are divided by this for daily figures.
    double days_per_month = 30;
    // Spot-based multi-NIC monthly cost per proxy, expressed as a multiple of
    // the vanilla monthly cost at the reference traffic.
    double baseline_ratio = 34.4;

    /// Overrides from a flat JSON object with the field names above.
    /// Throws std::invalid_argument on unknown fields or negative values.
    static PricingSchedule from_json(const std::string& text);
    void validate() const;
};

/// Rounds half away from zero to whole cents.
double round_cents(double usd);

struct CostBreakdown {
    double requests = 0;
    double request_cost = 0;
    double gb_seconds = 0;
    double compute_cost = 0;
    double vps_cost = 0;

    double total() const { return request_cost + compute_cost + vps_cost; }
    double total_cents() const { return round_cents(total()); }
};

/// Requests generated by `traffic_gb` of traffic.
double requests_for_traffic(double traffic_gb, const PricingSchedule& s = {});

/// Request cost after `free_requests` plus compute cost after
/// `free_gb_seconds`.
CostBreakdown serverless_cost(double requests, double duration_ms, double memory_mb, double free_requests,
                              double free_gb_seconds, const PricingSchedule& s = {});

CostBreakdown monthly_vanilla_cost(double traffic_gb, double duration_ms, double memory_mb,
                                   const PricingSchedule& s = {});

/// Throws std::invalid_argument for n_vps < 1.
CostBreakdown monthly_private_cost(double traffic_gb, double duration_ms, double memory_mb, int n_vps,
                                   const PricingSchedule& s = {});

/// Reference spot-based multi-NIC monthly cost for one proxy.
double spot_baseline_monthly(const PricingSchedule& s = {});

struct DailyPoint {
    int n_proxies = 0;
    double censorless = 0;
    double censorless_private = 0;
    double spotproxy = 0;
};

struct DailyOptions {
    // Bill compute as well as requests (off: request pricing only).
    bool include_compute = false;
    double duration_ms = 1000;
    double memory_mb = 128;
    int n_vps = 1;
};

DailyPoint daily_scaling_curve(int n_proxies, double requests_per_proxy, double hours, const PricingSchedule& s = {},
                               const DailyOptions& options = {});

/// Daily cost of one proxy serving `requests_per_day` with private mode on
/// for `private_hours_per_day`. Throws std::invalid_argument outside [0, 24].
double security_level_cost(double private_hours_per_day, const PricingSchedule& s = {},
                           double requests_per_day = 86'400);

struct Row {
    std::string label;
    std::vector<std::string> cells;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<Row> rows;

    std::string to_text() const;
    std::string to_csv() const;
};

/// Monthly single-proxy comparison.
Table fig8_table(const PricingSchedule& s = {});
/// Daily cost versus proxy count (0..300 step 25, one request per second for
/// one hour).
Table fig9_table(const PricingSchedule& s = {});
/// Daily cost versus share of the day in private mode (0..100% step 25).
Table fig13_table(const PricingSchedule& s = {});

}  // namespace censorless::cost

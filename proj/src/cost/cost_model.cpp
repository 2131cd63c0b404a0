#include "censorless/cost/cost_model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace censorless::cost {

namespace {

std::string money(double usd) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << round_cents(usd);
    return out.str();
}

std::string fixed(double v, int digits) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

}  // namespace

PricingSchedule PricingSchedule::from_json(const std::string& text) {
    PricingSchedule s;
    std::map<std::string, double*> fields = {
        {"price_per_million_requests", &s.price_per_million_requests},
        {"free_requests", &s.free_requests},
        {"price_per_gb_second", &s.price_per_gb_second},
        {"free_gb_seconds", &s.free_gb_seconds},
        {"mb_per_request", &s.mb_per_request},
        {"vps_monthly", &s.vps_monthly},
        {"vps_hourly", &s.vps_hourly},
        {"spot_hourly", &s.spot_hourly},
        {"mb_per_gb", &s.mb_per_gb},
        {"days_per_month", &s.days_per_month},
        {"baseline_ratio", &s.baseline_ratio},
    };
    auto doc = nlohmann::json::parse(text);
    if (!doc.is_object()) throw std::invalid_argument("pricing: expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        auto it = fields.find(key);
        if (it == fields.end()) throw std::invalid_argument("pricing: unknown field " + key);
        if (!value.is_number()) throw std::invalid_argument("pricing: " + key + " must be a number");
        *it->second = value.get<double>();
    }
    s.validate();
    return s;
}

void PricingSchedule::validate() const {
    auto check = [](double v, const char* name) {
        if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument(std::string("pricing: ") + name + " must be >= 0");
    };
    check(price_per_million_requests, "price_per_million_requests");
    check(free_requests, "free_requests");
    check(price_per_gb_second, "price_per_gb_second");
    check(free_gb_seconds, "free_gb_seconds");
    check(vps_monthly, "vps_monthly");
    check(vps_hourly, "vps_hourly");
    check(spot_hourly, "spot_hourly");
    check(baseline_ratio, "baseline_ratio");
    if (!(mb_per_request > 0)) throw std::invalid_argument("pricing: mb_per_request must be > 0");
    if (!(mb_per_gb > 0)) throw std::invalid_argument("pricing: mb_per_gb must be > 0");
    if (!(days_per_month > 0)) throw std::invalid_argument("pricing: days_per_month must be > 0");
}

double round_cents(double usd) { return std::round(usd * 100.0) / 100.0; }

double requests_for_traffic(double traffic_gb, const PricingSchedule& s) {
    return std::max(0.0, traffic_gb) * s.mb_per_gb / s.mb_per_request;
}

CostBreakdown serverless_cost(double requests, double duration_ms, double memory_mb, double free_requests,
                              double free_gb_seconds, const PricingSchedule& s) {
    CostBreakdown c;
    c.requests = requests;
    c.request_cost = std::max(0.0, requests - free_requests) * s.price_per_million_requests / 1e6;
    c.gb_seconds = requests * (memory_mb / 1024.0) * (duration_ms / 1000.0);
    c.compute_cost = std::max(0.0, c.gb_seconds - free_gb_seconds) * s.price_per_gb_second;
    return c;
}

CostBreakdown monthly_vanilla_cost(double traffic_gb, double duration_ms, double memory_mb, const PricingSchedule& s) {
    return serverless_cost(requests_for_traffic(traffic_gb, s), duration_ms, memory_mb, s.free_requests,
                           s.free_gb_seconds, s);
}

CostBreakdown monthly_private_cost(double traffic_gb, double duration_ms, double memory_mb, int n_vps,
                                   const PricingSchedule& s) {
    if (n_vps < 1) throw std::invalid_argument("n_vps must be at least 1");
    auto c = monthly_vanilla_cost(traffic_gb, duration_ms, memory_mb, s);
    c.vps_cost = n_vps * s.vps_monthly;
    return c;
}

double spot_baseline_monthly(const PricingSchedule& s) {
    return monthly_vanilla_cost(6.76, 1000, 128, s).total_cents() * s.baseline_ratio;
}

DailyPoint daily_scaling_curve(int n_proxies, double requests_per_proxy, double hours, const PricingSchedule& s,
                               const DailyOptions& options) {
    if (n_proxies < 0 || requests_per_proxy < 0 || hours < 0)
        throw std::invalid_argument("daily_scaling_curve: counts must be >= 0");
    DailyPoint p;
    p.n_proxies = n_proxies;
    p.spotproxy = n_proxies * s.spot_hourly * hours;
    double requests = n_proxies * requests_per_proxy;
    auto c = serverless_cost(requests, options.duration_ms, options.memory_mb, s.free_requests / s.days_per_month,
                             s.free_gb_seconds / s.days_per_month, s);
    p.censorless = c.request_cost + (options.include_compute ? c.compute_cost : 0.0);
    p.censorless_private = p.censorless + options.n_vps * s.vps_hourly * 24;
    return p;
}

double security_level_cost(double private_hours_per_day, const PricingSchedule& s, double requests_per_day) {
    if (!(private_hours_per_day >= 0 && private_hours_per_day <= 24))
        throw std::invalid_argument("private_hours_per_day must be within [0, 24]");
    auto c = serverless_cost(requests_per_day, 0, 0, s.free_requests / s.days_per_month, 0, s);
    return c.request_cost + s.vps_hourly * private_hours_per_day;
}

std::string Table::to_text() const {
    std::vector<std::size_t> width(columns.size(), 0);
    for (std::size_t i = 0; i < columns.size(); ++i) width[i] = columns[i].size();
    for (const auto& r : rows) {
        width[0] = std::max(width[0], r.label.size());
        for (std::size_t i = 0; i < r.cells.size() && i + 1 < width.size(); ++i)
            width[i + 1] = std::max(width[i + 1], r.cells[i].size());
    }
    std::ostringstream out;
    auto line = [&](const std::string& first, const std::vector<std::string>& rest) {
        out << std::left << std::setw(static_cast<int>(width[0])) << first;
        for (std::size_t i = 0; i < rest.size() && i + 1 < width.size(); ++i)
            out << "  " << std::right << std::setw(static_cast<int>(width[i + 1])) << rest[i];
        out << '\n';
    };
    line(columns.front(), std::vector<std::string>(columns.begin() + 1, columns.end()));
    for (const auto& r : rows) line(r.label, r.cells);
    return out.str();
}

std::string Table::to_csv() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& r : rows) {
        out << r.label;
        for (const auto& c : r.cells) out << ',' << c;
        out << '\n';
    }
    return out.str();
}

Table fig8_table(const PricingSchedule& s) {
    auto vanilla = monthly_vanilla_cost(6.76, 1000, 128, s).total_cents();
    auto priv = monthly_private_cost(6.76, 1000, 128, 1, s).total_cents();
    auto baseline = spot_baseline_monthly(s);
    Table t;
    t.columns = {"system", "monthly_usd", "baseline_over_system"};
    t.rows.push_back({"spotproxy-multi-nic", {money(baseline), fixed(1.0, 2)}});
    t.rows.push_back({"censorless-vanilla", {money(vanilla), fixed(baseline / vanilla, 2)}});
    t.rows.push_back({"censorless-private", {money(priv), fixed(baseline / priv, 2)}});
    return t;
}

Table fig9_table(const PricingSchedule& s) {
    Table t;
    t.columns = {"proxies", "censorless_usd", "censorless_private_usd", "spotproxy_usd"};
    for (int n = 0; n <= 300; n += 25) {
        auto p = daily_scaling_curve(n, 3600, 1, s);
        t.rows.push_back({std::to_string(n), {fixed(p.censorless, 4), fixed(p.censorless_private, 4), fixed(p.spotproxy, 4)}});
    }
    return t;
}

Table fig13_table(const PricingSchedule& s) {
    Table t;
    t.columns = {"private_share_pct", "private_hours", "daily_usd", "spotproxy_daily_usd"};
    for (int pct = 0; pct <= 100; pct += 25) {
        double hours = 24.0 * pct / 100.0;
        t.rows.push_back({std::to_string(pct),
                          {fixed(hours, 1), fixed(security_level_cost(hours, s), 4), fixed(s.spot_hourly * 24, 4)}});
    }
    return t;
}

}  // namespace censorless::cost

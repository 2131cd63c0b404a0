#pragma once

// In-process stand-in for a function-as-a-service platform: deployment with
// random one-time URLs, Host-based routing, cold/warm instances, timeouts,
// payload caps, per-function tags and billing counters.

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "censorless/clock.hpp"
#include "censorless/http/message.hpp"

namespace censorless::platform {

using namespace std::chrono_literals;

inline constexpr std::size_t kDefaultPayloadCap = 6u << 20;
inline constexpr std::size_t kExtendedPayloadCap = 20u << 20;

struct FunctionConfig {
    std::chrono::milliseconds timeout = 15s;
    int memory_mb = 128;
    int storage_mb = 512;
    std::size_t payload_cap = kDefaultPayloadCap;
};

struct EmulatorConfig {
    std::chrono::milliseconds cold_start = 400ms;
    std::chrono::seconds keep_warm = 300s;
    int max_concurrency = 1000;
    std::uint64_t seed = 1;
};

class PlatformEmulator;

/// What a running function can see of the platform.
class InvocationContext {
public:
    InvocationContext(PlatformEmulator& platform, std::string function_id)
        : platform_(platform), function_id_(std::move(function_id)) {}

    const std::string& function_id() const noexcept { return function_id_; }
    std::optional<std::string> get_tag(const std::string& key) const;
    std::map<std::string, std::string> tags() const;

private:
    PlatformEmulator& platform_;
    std::string function_id_;
};

using Handler = std::function<http::Response(InvocationContext&, const http::Request&)>;

struct FunctionInfo {
    std::string id;
    std::string url;
    std::string host;
    std::string region;
    FunctionConfig config;
    Clock::time_point deployed_at;
    bool deleted = false;
};

struct BillingCounter {
    std::uint64_t invocations = 0;
    std::uint64_t total_duration_ms = 0;
    // Memory-milliseconds; kept integral so totals are exact.
    std::uint64_t mb_ms = 0;

    double gb_seconds() const { return static_cast<double>(mb_ms) / 1024.0 / 1000.0; }
    friend bool operator==(const BillingCounter&, const BillingCounter&) = default;
};

enum class InvokeStatus { ok, not_found, throttled, timeout, payload_too_large, handler_error };

std::string_view to_string(InvokeStatus status);

struct InvokeResult {
    InvokeStatus status = InvokeStatus::ok;
    http::Response response;
    std::string function_id;
    bool cold = false;
    std::chrono::milliseconds latency{0};
};

struct ConnectionRecord {
    Clock::time_point at;
    std::string sni;
    std::string host;
    std::string path;
    std::string function_id;  // empty when routing failed
    InvokeStatus status = InvokeStatus::ok;
};

class PlatformEmulator {
public:
    explicit PlatformEmulator(EmulatorConfig config = {}, Clock& clock = system_clock());

    Clock& clock() noexcept { return clock_; }
    const EmulatorConfig& config() const noexcept { return config_; }

    /// Deploys a function under a fresh URL in `region`.
    FunctionInfo deploy(Handler handler, const std::string& region, FunctionConfig config = {});
    /// Deletes the function; its URL is tombstoned and never reissued.
    /// Returns false for unknown or already deleted functions.
    bool remove(const std::string& function_id);

    /// Routes by `host_header` only. `sni` is recorded for inspection; it
    /// never influences routing. Defaults to the Host value.
    InvokeResult invoke(const std::string& host_header, const http::Request& request,
                        std::optional<std::string> sni = std::nullopt);

    /// Drops idle warm instances older than keep_warm. Returns how many.
    std::size_t expire_instances(Clock::time_point now);
    std::size_t expire_instances() { return expire_instances(clock_.now()); }

    /// Throws std::out_of_range for unknown or deleted functions.
    void set_tag(const std::string& function_id, const std::string& key, const std::string& value);
    std::optional<std::string> get_tag(const std::string& function_id, const std::string& key) const;
    std::map<std::string, std::string> tags(const std::string& function_id) const;

    std::optional<FunctionInfo> function(const std::string& function_id) const;
    std::optional<FunctionInfo> find_by_host(const std::string& host) const;
    std::optional<FunctionInfo> find_by_url(const std::string& url) const;
    std::vector<FunctionInfo> functions(bool include_deleted = false) const;
    bool tombstoned(const std::string& url) const;

    BillingCounter billing(const std::string& function_id) const;
    BillingCounter total_billing() const;
    /// {"<function id>": {"invocations": n, "total_duration_ms": n,
    ///  "gb_seconds": x}, ...}
    std::string stats_json() const;

    std::vector<ConnectionRecord> connection_log() const;
    std::size_t warm_instances(const std::string& function_id) const;
    int busy_instances(const std::string& function_id) const;

private:
    struct Instance {
        Clock::time_point last_used;
        bool busy = false;
    };
    struct Function {
        FunctionInfo info;
        Handler handler;
        std::map<std::string, std::string> tags;
        std::list<Instance> instances;
        BillingCounter billing;
    };

    Function& live_locked(const std::string& function_id);
    const Function& live_locked(const std::string& function_id) const;
    void log_locked(ConnectionRecord record);

    EmulatorConfig config_;
    Clock& clock_;
    mutable std::mutex mutex_;
    std::mt19937_64 rng_;
    std::map<std::string, Function> functions_;
    std::map<std::string, std::string> host_index_;  // host -> function id
    std::set<std::string> issued_ids_;
    std::set<std::string> tombstones_;
    std::deque<ConnectionRecord> log_;
};

}  // namespace censorless::platform

#include "censorless/platform/emulator.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "censorless/platform/url.hpp"

namespace censorless::platform {

namespace {

constexpr std::size_t kMaxLogEntries = 100000;

http::Response error_response(int status, std::string message) {
    http::Response r;
    r.status = status;
    r.headers.set("Content-Type", "application/json");
    r.body = to_bytes(nlohmann::json{{"message", std::move(message)}}.dump());
    return r;
}

}  // namespace

std::string_view to_string(InvokeStatus status) {
    switch (status) {
        case InvokeStatus::ok: return "ok";
        case InvokeStatus::not_found: return "not_found";
        case InvokeStatus::throttled: return "throttled";
        case InvokeStatus::timeout: return "timeout";
        case InvokeStatus::payload_too_large: return "payload_too_large";
        case InvokeStatus::handler_error: return "handler_error";
    }
    return "unknown";
}

std::optional<std::string> InvocationContext::get_tag(const std::string& key) const {
    return platform_.get_tag(function_id_, key);
}

std::map<std::string, std::string> InvocationContext::tags() const { return platform_.tags(function_id_); }

PlatformEmulator::PlatformEmulator(EmulatorConfig config, Clock& clock)
    : config_(config), clock_(clock), rng_(config.seed) {}

FunctionInfo PlatformEmulator::deploy(Handler handler, const std::string& region, FunctionConfig config) {
    if (region.empty()) throw std::invalid_argument("region must not be empty");
    std::lock_guard lock(mutex_);
    std::string id;
    do {
        id = random_function_id(rng_);
    } while (!issued_ids_.insert(id).second);
    Function f;
    f.info.id = id;
    f.info.url = function_url(id, region);
    f.info.host = function_host(id, region);
    f.info.region = region;
    f.info.config = config;
    f.info.deployed_at = clock_.now();
    f.handler = std::move(handler);
    host_index_[f.info.host] = id;
    auto info = f.info;
    functions_.emplace(id, std::move(f));
    return info;
}

bool PlatformEmulator::remove(const std::string& function_id) {
    std::lock_guard lock(mutex_);
    auto it = functions_.find(function_id);
    if (it == functions_.end() || it->second.info.deleted) return false;
    auto& f = it->second;
    f.info.deleted = true;
    f.tags.clear();
    std::erase_if(f.instances, [](const Instance& i) { return !i.busy; });
    tombstones_.insert(f.info.url);
    return true;
}

void PlatformEmulator::log_locked(ConnectionRecord record) {
    if (log_.size() >= kMaxLogEntries) log_.pop_front();
    log_.push_back(std::move(record));
}

InvokeResult PlatformEmulator::invoke(const std::string& host_header, const http::Request& request,
                                      std::optional<std::string> sni) {
    auto host = http::host_without_port(host_header);
    auto start = clock_.now();
    ConnectionRecord record{start, sni.value_or(host), host, request.target, {}, InvokeStatus::ok};

    InvokeResult result;
    Handler handler;
    FunctionConfig fconfig;
    std::list<Instance>::iterator instance;
    {
        std::lock_guard lock(mutex_);
        auto idx = host_index_.find(host);
        if (idx == host_index_.end() || functions_.at(idx->second).info.deleted) {
            record.status = InvokeStatus::not_found;
            log_locked(record);
            result.status = InvokeStatus::not_found;
            result.response = error_response(404, "no function is deployed at " + host);
            return result;
        }
        auto& f = functions_.at(idx->second);
        record.function_id = result.function_id = f.info.id;
        fconfig = f.info.config;
        if (request.body.size() > fconfig.payload_cap) {
            record.status = result.status = InvokeStatus::payload_too_large;
            log_locked(record);
            result.response = error_response(413, "request payload exceeds the function payload limit");
            return result;
        }
        int busy = 0;
        instance = f.instances.end();
        for (auto it = f.instances.begin(); it != f.instances.end(); ++it) {
            if (it->busy) {
                ++busy;
            } else if (instance == f.instances.end() && start - it->last_used <= config_.keep_warm) {
                instance = it;
            }
        }
        if (instance == f.instances.end()) {
            if (busy >= config_.max_concurrency) {
                record.status = result.status = InvokeStatus::throttled;
                log_locked(record);
                result.response = error_response(429, "concurrency limit reached");
                return result;
            }
            instance = f.instances.insert(f.instances.end(), Instance{start, false});
            result.cold = true;
        }
        instance->busy = true;
        handler = f.handler;
        log_locked(record);
    }

    if (result.cold) clock_.sleep_for(config_.cold_start);
    InvocationContext ctx(*this, result.function_id);
    try {
        result.response = handler(ctx, request);
    } catch (const std::exception& e) {
        result.status = InvokeStatus::handler_error;
        result.response = error_response(502, std::string("function raised: ") + e.what());
    }
    auto end = clock_.now();
    auto elapsed = std::chrono::ceil<std::chrono::milliseconds>(end - start);
    if (elapsed > fconfig.timeout) {
        // The handler cannot be preempted in-process; its late output is
        // discarded and the invocation is billed at the limit.
        elapsed = fconfig.timeout;
        result.status = InvokeStatus::timeout;
        result.response = error_response(504, "function timed out");
    } else if (result.response.body.size() > fconfig.payload_cap) {
        result.status = InvokeStatus::payload_too_large;
        result.response = error_response(502, "response payload exceeds the function payload limit");
    }
    result.latency = elapsed;

    std::lock_guard lock(mutex_);
    auto& f = functions_.at(result.function_id);
    instance->busy = false;
    instance->last_used = end;
    auto ms = static_cast<std::uint64_t>(elapsed.count());
    ++f.billing.invocations;
    f.billing.total_duration_ms += ms;
    f.billing.mb_ms += ms * static_cast<std::uint64_t>(fconfig.memory_mb);
    if (f.info.deleted) std::erase_if(f.instances, [](const Instance& i) { return !i.busy; });
    return result;
}

std::size_t PlatformEmulator::expire_instances(Clock::time_point now) {
    std::lock_guard lock(mutex_);
    std::size_t removed = 0;
    for (auto& [id, f] : functions_) {
        removed += std::erase_if(f.instances,
                                 [&](const Instance& i) { return !i.busy && now - i.last_used > config_.keep_warm; });
    }
    return removed;
}

PlatformEmulator::Function& PlatformEmulator::live_locked(const std::string& function_id) {
    auto it = functions_.find(function_id);
    if (it == functions_.end() || it->second.info.deleted) throw std::out_of_range("unknown function " + function_id);
    return it->second;
}

const PlatformEmulator::Function& PlatformEmulator::live_locked(const std::string& function_id) const {
    auto it = functions_.find(function_id);
    if (it == functions_.end() || it->second.info.deleted) throw std::out_of_range("unknown function " + function_id);
    return it->second;
}

void PlatformEmulator::set_tag(const std::string& function_id, const std::string& key, const std::string& value) {
    std::lock_guard lock(mutex_);
    live_locked(function_id).tags[key] = value;
}

std::optional<std::string> PlatformEmulator::get_tag(const std::string& function_id, const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto& tags = live_locked(function_id).tags;
    auto it = tags.find(key);
    if (it == tags.end()) return std::nullopt;
    return it->second;
}

std::map<std::string, std::string> PlatformEmulator::tags(const std::string& function_id) const {
    std::lock_guard lock(mutex_);
    return live_locked(function_id).tags;
}

std::optional<FunctionInfo> PlatformEmulator::function(const std::string& function_id) const {
    std::lock_guard lock(mutex_);
    auto it = functions_.find(function_id);
    if (it == functions_.end()) return std::nullopt;
    return it->second.info;
}

std::optional<FunctionInfo> PlatformEmulator::find_by_host(const std::string& host) const {
    std::lock_guard lock(mutex_);
    auto it = host_index_.find(http::host_without_port(host));
    if (it == host_index_.end()) return std::nullopt;
    return functions_.at(it->second).info;
}

std::optional<FunctionInfo> PlatformEmulator::find_by_url(const std::string& url) const {
    auto parsed = parse_function_url(url);
    if (!parsed) return std::nullopt;
    return find_by_host(parsed->host);
}

std::vector<FunctionInfo> PlatformEmulator::functions(bool include_deleted) const {
    std::lock_guard lock(mutex_);
    std::vector<FunctionInfo> out;
    for (const auto& [id, f] : functions_)
        if (include_deleted || !f.info.deleted) out.push_back(f.info);
    return out;
}

bool PlatformEmulator::tombstoned(const std::string& url) const {
    std::lock_guard lock(mutex_);
    return tombstones_.count(url) > 0;
}

BillingCounter PlatformEmulator::billing(const std::string& function_id) const {
    std::lock_guard lock(mutex_);
    auto it = functions_.find(function_id);
    return it == functions_.end() ? BillingCounter{} : it->second.billing;
}

BillingCounter PlatformEmulator::total_billing() const {
    std::lock_guard lock(mutex_);
    BillingCounter total;
    for (const auto& [id, f] : functions_) {
        total.invocations += f.billing.invocations;
        total.total_duration_ms += f.billing.total_duration_ms;
        total.mb_ms += f.billing.mb_ms;
    }
    return total;
}

std::string PlatformEmulator::stats_json() const {
    std::lock_guard lock(mutex_);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [id, f] : functions_) {
        out[id] = {{"invocations", f.billing.invocations},
                   {"total_duration_ms", f.billing.total_duration_ms},
                   {"gb_seconds", f.billing.gb_seconds()}};
    }
    return out.dump(2);
}

std::vector<ConnectionRecord> PlatformEmulator::connection_log() const {
    std::lock_guard lock(mutex_);
    return {log_.begin(), log_.end()};
}

std::size_t PlatformEmulator::warm_instances(const std::string& function_id) const {
    std::lock_guard lock(mutex_);
    auto it = functions_.find(function_id);
    if (it == functions_.end()) return 0;
    return std::count_if(it->second.instances.begin(), it->second.instances.end(),
                         [](const Instance& i) { return !i.busy; });
}

int PlatformEmulator::busy_instances(const std::string& function_id) const {
    std::lock_guard lock(mutex_);
    auto it = functions_.find(function_id);
    if (it == functions_.end()) return 0;
    return static_cast<int>(std::count_if(it->second.instances.begin(), it->second.instances.end(),
                                          [](const Instance& i) { return i.busy; }));
}

}  // namespace censorless::platform

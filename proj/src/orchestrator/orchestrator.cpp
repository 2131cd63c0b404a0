#include "censorless/orchestrator/orchestrator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

#include "censorless/bridge/bridge.hpp"

namespace censorless::orchestrator {

std::string_view to_string(BridgeStatus status) {
    switch (status) {
        case BridgeStatus::active: return "active";
        case BridgeStatus::draining: return "draining";
        case BridgeStatus::retired: return "retired";
    }
    return "unknown";
}

Orchestrator::Orchestrator(platform::PlatformEmulator& platform, HandlerFactory factory, OrchestratorConfig config,
                           Clock& clock)
    : platform_(platform), factory_(std::move(factory)), config_(std::move(config)), clock_(clock), rng_(config_.seed) {
    if (!config_.log_path.empty()) {
        log_.open(config_.log_path, std::ios::app);
        if (!log_) throw std::runtime_error("cannot open mapping log " + config_.log_path);
    }
}

Orchestrator::~Orchestrator() {
    stop();
    std::lock_guard lock(mutex_);
    if (log_.is_open()) log_.flush();
}

void Orchestrator::log_locked(const std::string& event, const std::string& client_id, const std::string& url) {
    if (!log_.is_open()) return;
    auto ts = std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
    nlohmann::json rec = {{"ts", ts}, {"event", event}, {"client_id", client_id}, {"url", url}};
    log_ << rec.dump() << '\n';
}

void Orchestrator::set_batch_listener(BatchListener listener) {
    std::lock_guard lock(mutex_);
    listener_ = std::move(listener);
}

BridgeDescriptor Orchestrator::adopt(const platform::FunctionInfo& info, Clock::time_point now) {
    std::lock_guard lock(mutex_);
    return adopt_locked(info, now);
}

BridgeDescriptor Orchestrator::adopt_locked(const platform::FunctionInfo& info, Clock::time_point now) {
    if (tombstones_.count(info.url) || platform_.tombstoned(info.url))
        throw PreconditionError("url was retired and cannot be used again: " + info.url);
    if (bridges_.count(info.url)) throw PreconditionError("url already managed: " + info.url);
    BridgeDescriptor d;
    d.function_id = info.id;
    d.url = info.url;
    d.region = info.region;
    d.created_at = now;
    d.retire_after = config_.refresh_interval + config_.grace;
    bridges_[d.url] = d;
    log_locked("deploy", "", d.url);
    return d;
}

std::vector<BridgeDescriptor> Orchestrator::refresh_batch(std::size_t n, const std::vector<std::string>& regions,
                                                          Clock::time_point now) {
    if (n == 0) throw PreconditionError("refresh_batch: n must be at least 1");
    if (regions.empty()) throw PreconditionError("refresh_batch: regions must not be empty");
    std::vector<BridgeDescriptor> batch;
    BatchListener listener;
    {
        std::lock_guard lock(mutex_);
        std::size_t offset = std::uniform_int_distribution<std::size_t>(0, regions.size() - 1)(rng_);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& region = regions[(offset + i) % regions.size()];
            try {
                auto info = platform_.deploy(factory_(), region, config_.function);
                batch.push_back(adopt_locked(info, now));
            } catch (const std::exception&) {
                // Partial batch; callers see the shorter result.
            }
        }
        ++batches_;
        last_refresh_ = now;
        if (!batch.empty()) {
            for (const auto& client : pending_) {
                const auto& pick = batch[std::uniform_int_distribution<std::size_t>(0, batch.size() - 1)(rng_)];
                mapping_[client] = ClientAssignment{pick.url, std::nullopt, now};
                log_locked("register", client, pick.url);
            }
            pending_.clear();
        }
        listener = listener_;
    }
    if (listener && !batch.empty()) listener(batch);
    return batch;
}

std::size_t Orchestrator::migrate_clients(const std::vector<BridgeDescriptor>& batch, Clock::time_point now) {
    if (batch.empty()) throw PreconditionError("migrate_clients: empty batch");
    std::lock_guard lock(mutex_);
    std::vector<std::string> targets;
    for (const auto& d : batch) {
        auto it = bridges_.find(d.url);
        if (it == bridges_.end() || it->second.status != BridgeStatus::active)
            throw PreconditionError("migrate_clients: batch member is not active: " + d.url);
        targets.push_back(d.url);
    }
    std::set<std::string> in_batch(targets.begin(), targets.end());

    std::size_t moved = 0;
    std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
    for (auto& [client, a] : mapping_) {
        const auto& next = targets[pick(rng_)];
        if (a.current == next) continue;
        auto old = bridges_.find(a.current);
        if (old != bridges_.end() && old->second.status != BridgeStatus::retired) {
            platform_.set_tag(old->second.function_id, bridge::migration_tag_key(client), next);
            a.previous = a.current;
        } else {
            a.previous.reset();
        }
        a.current = next;
        a.assigned_at = now;
        ++moved;
        log_locked("migrate", client, next);
    }
    // The new batch supersedes every other active bridge.
    for (auto& [url, d] : bridges_) {
        if (d.status == BridgeStatus::active && !in_batch.count(url)) {
            d.status = BridgeStatus::draining;
            d.draining_since = now;
        }
    }
    return moved;
}

std::vector<BridgeDescriptor> Orchestrator::retire_expired(Clock::time_point now) {
    std::lock_guard lock(mutex_);
    std::set<std::string> in_use;
    for (const auto& [client, a] : mapping_) in_use.insert(a.current);
    std::vector<BridgeDescriptor> retired;
    for (auto& [url, d] : bridges_) {
        if (d.status != BridgeStatus::draining || !d.draining_since) continue;
        if (now - *d.draining_since < config_.grace) continue;
        if (in_use.count(url)) continue;  // cannot happen: draining bridges are never anyone's current
        platform_.remove(d.function_id);
        d.status = BridgeStatus::retired;
        tombstones_.insert(url);
        retired.push_back(d);
        log_locked("retire", "", url);
    }
    for (auto& [client, a] : mapping_)
        if (a.previous && tombstones_.count(*a.previous)) a.previous.reset();
    return retired;
}

std::optional<BridgeDescriptor> Orchestrator::register_client(const std::string& client_id) {
    std::lock_guard lock(mutex_);
    if (auto it = mapping_.find(client_id); it != mapping_.end()) return bridges_.at(it->second.current);
    auto active = active_locked();
    if (active.empty()) {
        if (std::find(pending_.begin(), pending_.end(), client_id) == pending_.end()) pending_.push_back(client_id);
        return std::nullopt;
    }
    const auto& pick = active[std::uniform_int_distribution<std::size_t>(0, active.size() - 1)(rng_)];
    mapping_[client_id] = ClientAssignment{pick.url, std::nullopt, clock_.now()};
    log_locked("register", client_id, pick.url);
    return pick;
}

bool Orchestrator::tick(Clock::time_point now) {
    bool due;
    {
        std::lock_guard lock(mutex_);
        due = !last_refresh_ || now - *last_refresh_ >= config_.refresh_interval || active_locked().empty();
    }
    if (due) {
        auto batch = refresh_batch(config_.batch_size, config_.regions, now);
        if (!batch.empty()) migrate_clients(batch, now);
    }
    retire_expired(now);
    return due;
}

void Orchestrator::run_background(std::chrono::milliseconds period) {
    {
        std::lock_guard lock(worker_mutex_);
        stopping_ = false;
    }
    worker_ = std::thread([this, period] {
        std::unique_lock lock(worker_mutex_);
        while (!stopping_) {
            lock.unlock();
            try {
                tick(clock_.now());
            } catch (const std::exception&) {
                // Retry on the next period.
            }
            lock.lock();
            worker_cv_.wait_for(lock, period, [this] { return stopping_; });
        }
    });
}

void Orchestrator::stop() {
    {
        std::lock_guard lock(worker_mutex_);
        stopping_ = true;
    }
    worker_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

std::vector<BridgeDescriptor> Orchestrator::active_locked() const {
    std::vector<BridgeDescriptor> out;
    for (const auto& [url, d] : bridges_)
        if (d.status == BridgeStatus::active) out.push_back(d);
    return out;
}

std::map<std::string, ClientAssignment> Orchestrator::mapping() const {
    std::lock_guard lock(mutex_);
    return mapping_;
}

std::optional<ClientAssignment> Orchestrator::assignment(const std::string& client_id) const {
    std::lock_guard lock(mutex_);
    auto it = mapping_.find(client_id);
    if (it == mapping_.end()) return std::nullopt;
    return it->second;
}

std::vector<BridgeDescriptor> Orchestrator::bridges(std::optional<BridgeStatus> status) const {
    std::lock_guard lock(mutex_);
    std::vector<BridgeDescriptor> out;
    for (const auto& [url, d] : bridges_)
        if (!status || d.status == *status) out.push_back(d);
    return out;
}

std::optional<BridgeDescriptor> Orchestrator::bridge(const std::string& url) const {
    std::lock_guard lock(mutex_);
    auto it = bridges_.find(url);
    if (it == bridges_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> Orchestrator::pending_clients() const {
    std::lock_guard lock(mutex_);
    return pending_;
}

bool Orchestrator::tombstoned(const std::string& url) const {
    std::lock_guard lock(mutex_);
    return tombstones_.count(url) > 0;
}

std::size_t Orchestrator::batches() const {
    std::lock_guard lock(mutex_);
    return batches_;
}

void Orchestrator::flush() {
    std::lock_guard lock(mutex_);
    for (const auto& [client, a] : mapping_) log_locked("snapshot", client, a.current);
    if (log_.is_open()) log_.flush();
}

std::map<std::string, std::string> Orchestrator::replay_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read mapping log " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) continue;  // torn tail after a crash
        auto event = rec.value("event", "");
        auto client = rec.value("client_id", "");
        if (client.empty()) continue;
        if (event == "register" || event == "migrate" || event == "snapshot") out[client] = rec.value("url", "");
    }
    return out;
}

std::size_t Orchestrator::restore(const std::string& path) {
    auto entries = replay_log(path);
    std::lock_guard lock(mutex_);
    std::size_t restored = 0;
    for (const auto& [client, url] : entries) {
        auto it = bridges_.find(url);
        if (it == bridges_.end() || it->second.status != BridgeStatus::active) continue;
        mapping_[client] = ClientAssignment{url, std::nullopt, clock_.now()};
        ++restored;
    }
    return restored;
}

}  // namespace censorless::orchestrator

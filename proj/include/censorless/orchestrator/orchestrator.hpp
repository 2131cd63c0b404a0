#pragma once

// Operator side: the function refresher deploys and retires bridge batches,
// the controller keeps the client -> bridge mapping and publishes migration
// tags onto the bridges clients are leaving.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "censorless/clock.hpp"
#include "censorless/platform/emulator.hpp"

namespace censorless::orchestrator {

using namespace std::chrono_literals;

enum class BridgeStatus { active, draining, retired };

std::string_view to_string(BridgeStatus status);

struct BridgeDescriptor {
    std::string function_id;
    std::string url;
    std::string region;
    Clock::time_point created_at;
    Clock::duration retire_after{0};
    BridgeStatus status = BridgeStatus::active;
    std::optional<Clock::time_point> draining_since;
};

struct ClientAssignment {
    std::string current;                  // url of an active bridge
    std::optional<std::string> previous;  // url of a draining bridge
    Clock::time_point assigned_at;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct OrchestratorConfig {
    std::vector<std::string> regions = {"us-east-1"};
    std::size_t batch_size = 3;
    std::chrono::milliseconds refresh_interval = 20s;
    // Time a superseded bridge stays invocable after its tags are published.
    // Three client poll intervals by default.
    std::chrono::milliseconds grace = 15s;
    platform::FunctionConfig function;
    std::uint64_t seed = 7;
    // Append-only mapping log (JSON lines); empty disables it.
    std::string log_path;
};

/// Creates the handler for a freshly deployed bridge.
using HandlerFactory = std::function<platform::Handler()>;
/// Called with each new batch (the refresher -> controller notification).
using BatchListener = std::function<void(const std::vector<BridgeDescriptor>&)>;

class Orchestrator {
public:
    Orchestrator(platform::PlatformEmulator& platform, HandlerFactory factory, OrchestratorConfig config = {},
                 Clock& clock = system_clock());
    ~Orchestrator();

    /// Deploys n bridges spread over `regions` (round robin from a random
    /// starting region). Deploy failures yield a shorter batch. Pending
    /// registrations are served from the new batch.
    std::vector<BridgeDescriptor> refresh_batch(std::size_t n, const std::vector<std::string>& regions,
                                                Clock::time_point now);

    /// Moves every client to a random member of `batch`; the old bridge gets
    /// a migrate tag per client and starts draining. Throws PreconditionError
    /// for an empty batch or one with inactive members.
    std::size_t migrate_clients(const std::vector<BridgeDescriptor>& batch, Clock::time_point now);

    /// Deletes draining bridges past the grace period that nobody uses as
    /// current. Their URLs are tombstoned.
    std::vector<BridgeDescriptor> retire_expired(Clock::time_point now);

    /// Random active bridge for a new client; the same one for a known
    /// client. nullopt when the pool is empty (served after the next batch).
    std::optional<BridgeDescriptor> register_client(const std::string& client_id);

    /// One controller step: refresh + migrate when the interval has passed
    /// (or nothing is active), then retire. Returns whether a batch was made.
    bool tick(Clock::time_point now);
    bool tick() { return tick(clock_.now()); }

    /// Runs tick() on the clock until stop().
    void run_background(std::chrono::milliseconds period = 250ms);
    void stop();

    /// Registers an externally deployed function; throws PreconditionError
    /// for a tombstoned URL.
    BridgeDescriptor adopt(const platform::FunctionInfo& info, Clock::time_point now);

    void set_batch_listener(BatchListener listener);

    std::map<std::string, ClientAssignment> mapping() const;
    std::optional<ClientAssignment> assignment(const std::string& client_id) const;
    std::vector<BridgeDescriptor> bridges(std::optional<BridgeStatus> status = std::nullopt) const;
    std::optional<BridgeDescriptor> bridge(const std::string& url) const;
    std::vector<std::string> pending_clients() const;
    bool tombstoned(const std::string& url) const;
    std::size_t batches() const;

    /// Writes a snapshot record per client to the log and flushes it.
    void flush();

    /// Replays a mapping log: client -> last assigned url.
    static std::map<std::string, std::string> replay_log(const std::string& path);
    /// Re-registers clients from a log whose bridge is still active here.
    /// Returns how many were restored.
    std::size_t restore(const std::string& path);

    const OrchestratorConfig& config() const noexcept { return config_; }

private:
    std::vector<BridgeDescriptor> active_locked() const;
    BridgeDescriptor adopt_locked(const platform::FunctionInfo& info, Clock::time_point now);
    void log_locked(const std::string& event, const std::string& client_id, const std::string& url);

    platform::PlatformEmulator& platform_;
    HandlerFactory factory_;
    OrchestratorConfig config_;
    Clock& clock_;

    mutable std::mutex mutex_;
    std::mt19937_64 rng_;
    std::map<std::string, BridgeDescriptor> bridges_;  // by url
    std::map<std::string, ClientAssignment> mapping_;
    std::vector<std::string> pending_;
    std::set<std::string> tombstones_;
    std::optional<Clock::time_point> last_refresh_;
    std::size_t batches_ = 0;
    BatchListener listener_;
    std::ofstream log_;

    std::thread worker_;
    std::mutex worker_mutex_;
    std::condition_variable worker_cv_;
    bool stopping_ = false;
};

}  // namespace censorless::orchestrator

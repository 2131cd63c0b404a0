#pragma once

#include <chrono>
#include <mutex>

namespace censorless {

/// Time source shared by the emulator, orchestrator and exit server so tests
/// can run on virtual time.
class Clock {
public:
    using duration = std::chrono::steady_clock::duration;
    using time_point = std::chrono::steady_clock::time_point;

    virtual ~Clock() = default;
    virtual time_point now() const = 0;
    virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
public:
    time_point now() const override { return std::chrono::steady_clock::now(); }
    void sleep_for(duration d) override;
};

/// Manually advanced clock. sleep_for advances time instead of blocking, so
/// simulated latency costs nothing in wall time.
class VirtualClock final : public Clock {
public:
    time_point now() const override;
    void sleep_for(duration d) override { advance(d); }
    void advance(duration d);

private:
    mutable std::mutex mutex_;
    duration offset_{0};
};

/// Process-wide real clock.
Clock& system_clock();

}  // namespace censorless

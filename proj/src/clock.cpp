#include "censorless/clock.hpp"

#include <thread>

namespace censorless {

void SystemClock::sleep_for(duration d) { std::this_thread::sleep_for(d); }

VirtualClock::time_point VirtualClock::now() const {
    std::lock_guard lock(mutex_);
    return time_point{} + offset_;
}

void VirtualClock::advance(duration d) {
    std::lock_guard lock(mutex_);
    offset_ += d;
}

Clock& system_clock() {
    static SystemClock clock;
    return clock;
}

}  // namespace censorless

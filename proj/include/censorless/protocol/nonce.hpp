#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>

#include "censorless/protocol/crypto.hpp"

namespace censorless::protocol {

/// Last accepted nonce per sender key. A nonce is accepted only when it is
/// strictly greater than the previous one for that key; the first accepted
/// nonce must be at least 1.
class NonceTable {
public:
    /// Atomic check-and-advance. Returns false (and leaves state unchanged)
    /// for a replayed or stale nonce.
    bool accept(const PublicKey& sender, std::uint64_t nonce);

    std::optional<std::uint64_t> last(const PublicKey& sender) const;

private:
    mutable std::mutex mutex_;
    std::map<PublicKey, std::uint64_t> last_;
};

/// Client-side generator; hands out strictly increasing nonces.
class NonceCounter {
public:
    explicit NonceCounter(std::uint64_t start = 1) : next_(start == 0 ? 1 : start) {}
    std::uint64_t next() {
        std::lock_guard lock(mutex_);
        return next_++;
    }
    /// Moves the counter forward so the next nonce is at least `n`.
    void advance_to(std::uint64_t n) {
        std::lock_guard lock(mutex_);
        if (n > next_) next_ = n;
    }
    std::uint64_t peek() const {
        std::lock_guard lock(mutex_);
        return next_;
    }

private:
    mutable std::mutex mutex_;
    std::uint64_t next_;
};

}  // namespace censorless::protocol

#include "censorless/protocol/nonce.hpp"

namespace censorless::protocol {

bool NonceTable::accept(const PublicKey& sender, std::uint64_t nonce) {
    std::lock_guard lock(mutex_);
    auto it = last_.find(sender);
    std::uint64_t floor = it == last_.end() ? 0 : it->second;
    if (nonce <= floor) return false;
    last_[sender] = nonce;
    return true;
}

std::optional<std::uint64_t> NonceTable::last(const PublicKey& sender) const {
    std::lock_guard lock(mutex_);
    auto it = last_.find(sender);
    if (it == last_.end()) return std::nullopt;
    return it->second;
}

}  // namespace censorless::protocol

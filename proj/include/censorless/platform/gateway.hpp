#pragma once

#include <memory>
#include <string>
#include <thread>

#include "censorless/platform/emulator.hpp"

namespace censorless::platform {

/// Header through which a plain-HTTP caller states the TLS SNI it would have
/// sent. The emulator records it and otherwise ignores it.
inline constexpr const char* kSniHeader = "X-Emulated-SNI";

/// Loopback HTTP front exposing every deployed function. Requests are routed
/// by their Host header exactly like in-process invocations.
class Gateway {
public:
    explicit Gateway(PlatformEmulator& platform);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    void start(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
    void stop();
    std::uint16_t port() const noexcept { return port_; }
    /// http://host:port
    std::string base_url() const;

private:
    struct Impl;
    PlatformEmulator& platform_;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    std::string host_;
    std::uint16_t port_ = 0;
};

}  // namespace censorless::platform

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <atomic>

#include "censorless/bridge/bridge.hpp"
#include "censorless/exit/exit_server.hpp"
#include "censorless/exit/listener.hpp"
#include "censorless/http/origin.hpp"
#include "censorless/platform/emulator.hpp"
#include "test_support.hpp"

using namespace censorless;
using namespace censorless::bridge;
using namespace std::chrono_literals;

namespace {

struct FakeUpstream : http::Upstream {
    std::atomic<int> calls{0};
    http::Url last_connect;
    http::Request last_request;
    http::Response reply;
    std::optional<http::UpstreamErrc> fail;

    http::Response send(const http::Url& connect, const http::Request& request) override {
        ++calls;
        last_connect = connect;
        last_request = request;
        if (fail) throw http::UpstreamError(*fail, "injected");
        return reply;
    }
    void send_streaming(const http::Url& connect, const http::Request& request,
                        const http::StreamHandler& handler) override {
        auto r = send(connect, request);
        handler.on_response(r.status, r.headers);
        handler.on_data(reinterpret_cast<const char*>(r.body.data()), r.body.size());
    }
};

struct Fixture {
    VirtualClock clock;
    platform::PlatformEmulator platform{{}, clock};
    std::shared_ptr<FakeUpstream> upstream = std::make_shared<FakeUpstream>();
    Bridge bridge;
    platform::FunctionInfo fn;

    explicit Fixture(ExitDialer dialer = {}) : bridge(BridgeConfig{}, upstream, std::move(dialer)) {
        fn = platform.deploy(bridge.handler(), "us-east-1");
    }

    platform::InvokeResult invoke(const http::Request& req) { return platform.invoke(fn.host, req); }
};

http::Request vanilla(const std::string& path, const std::string& x_host) {
    http::Request r;
    r.target = path;
    r.headers.set("Host", "bridge.example");
    r.headers.set(kHostHeader, x_host);
    r.headers.set("User-Agent", "ua");
    return r;
}

}  // namespace

TEST(Bridge, VanillaForwardSetsDestinationHost) {
    Fixture f;
    f.upstream->reply.body = to_bytes("ok");
    auto r = f.invoke(vanilla("/a?b=1", "example.org"));
    EXPECT_EQ(r.response.status, 200);
    EXPECT_EQ(to_string(r.response.body), "ok");
    EXPECT_EQ(f.upstream->last_connect.scheme, "https");
    EXPECT_EQ(f.upstream->last_connect.host, "example.org");
    EXPECT_EQ(f.upstream->last_request.target, "/a?b=1");
    EXPECT_EQ(f.upstream->last_request.headers.get("Host"), "example.org");
    EXPECT_FALSE(f.upstream->last_request.headers.contains(kHostHeader));
    EXPECT_EQ(f.upstream->last_request.headers.get("User-Agent"), "ua");
}

TEST(Bridge, HopByHopAndControlHeadersAreStripped) {
    Fixture f;
    auto req = vanilla("/", "example.org");
    req.headers.set("Connection", "keep-alive");
    req.headers.set("Proxy-Authorization", "x");
    req.headers.set(kClientHeader, "c1");
    f.invoke(req);
    const auto& h = f.upstream->last_request.headers;
    EXPECT_FALSE(h.contains("Connection"));
    EXPECT_FALSE(h.contains("Proxy-Authorization"));
    EXPECT_FALSE(h.contains(kClientHeader));
}

TEST(Bridge, RedirectPassesThroughVerbatim) {
    Fixture f;
    f.upstream->reply.status = 302;
    f.upstream->reply.headers.set("Location", "https://example.org/next");
    auto r = f.invoke(vanilla("/", "example.org"));
    EXPECT_EQ(r.response.status, 302);
    EXPECT_EQ(r.response.headers.get("Location"), "https://example.org/next");
}

TEST(Bridge, MissingXHostIsClientErrorWithoutUpstream) {
    Fixture f;
    http::Request r;
    r.target = "/";
    auto res = f.invoke(r);
    EXPECT_EQ(res.response.status, 400);
    EXPECT_EQ(f.upstream->calls, 0);
    EXPECT_EQ(f.bridge.forward_vanilla(r).status, 400);
}

TEST(Bridge, UnknownModeIsRejected) {
    Fixture f;
    auto r = vanilla("/", "example.org");
    r.headers.set(kModeHeader, "turbo");
    EXPECT_EQ(f.invoke(r).response.status, 400);
    EXPECT_EQ(f.upstream->calls, 0);
}

TEST(Bridge, OversizedBodyRejectedBeforeUpstream) {
    Fixture f;
    auto r = vanilla("/", "example.org");
    r.method = "POST";
    r.body.assign(7'000'000, 'x');
    // The platform itself refuses it...
    EXPECT_EQ(f.invoke(r).response.status, 413);
    // ...and so does the bridge when called directly.
    platform::InvocationContext ctx(f.platform, f.fn.id);
    auto res = f.bridge.handle_invocation(ctx, r);
    EXPECT_EQ(res.status, 413);
    EXPECT_EQ(res.headers.get(kErrorHeader), "payload");
    EXPECT_EQ(f.upstream->calls, 0);
}

TEST(Bridge, UpstreamErrorsCarryTheirClass) {
    Fixture f;
    f.upstream->fail = http::UpstreamErrc::connect;
    auto r = f.invoke(vanilla("/", "down.example"));
    EXPECT_EQ(r.response.status, 502);
    EXPECT_EQ(r.response.headers.get(kErrorHeader), "upstream-connect");
    f.upstream->fail = http::UpstreamErrc::timeout;
    EXPECT_EQ(f.invoke(vanilla("/", "slow.example")).response.headers.get(kErrorHeader), "upstream-timeout");
}

TEST(Bridge, MigrationEndpointAndPiggyback) {
    Fixture f;
    http::Request poll;
    poll.target = kMigrationPath;
    poll.headers.set(kClientHeader, "alice");
    auto none = nlohmann::json::parse(to_string(f.invoke(poll).response.body));
    EXPECT_TRUE(none["migrate_to"].is_null());

    const std::string next = "https://" + std::string(32, 'b') + ".lambda-url.us-east-1.on.aws/";
    f.platform.set_tag(f.fn.id, migration_tag_key("alice"), next);
    auto tagged = nlohmann::json::parse(to_string(f.invoke(poll).response.body));
    EXPECT_EQ(tagged["migrate_to"], next);

    // Query form of the client id.
    http::Request by_query;
    by_query.target = std::string(kMigrationPath) + "?client=alice";
    EXPECT_EQ(nlohmann::json::parse(to_string(f.invoke(by_query).response.body))["migrate_to"], next);

    // Another client's tag is not leaked.
    poll.headers.set(kClientHeader, "bob");
    EXPECT_TRUE(nlohmann::json::parse(to_string(f.invoke(poll).response.body))["migrate_to"].is_null());

    auto req = vanilla("/", "example.org");
    req.headers.set(kClientHeader, "alice");
    EXPECT_EQ(f.invoke(req).response.headers.get(kMigrateHeader), next);
}

TEST(Bridge, VanillaAgainstTestOrigin) {
    http::TestOrigin origin;
    origin.start();
    auto client = std::make_shared<http::HttpClient>();
    client->add_override("origin.test", origin.base_url());
    Bridge b(BridgeConfig{}, client);
    platform::PlatformEmulator p;
    auto fn = p.deploy(b.handler(), "us-east-1");
    auto r = p.invoke(fn.host, vanilla("/a", "origin.test"));
    EXPECT_EQ(r.response.status, 200);
    auto log = origin.requests();
    ASSERT_EQ(log.size(), 1u);
    EXPECT_EQ(log[0].host, "origin.test");
    EXPECT_EQ(log[0].target, "/a");
    auto redirect = p.invoke(fn.host, vanilla("/redirect", "origin.test"));
    EXPECT_EQ(redirect.response.status, 302);
    origin.stop();
}

TEST(Bridge, PrivateRelayIsOpaque) {
    auto server_keys = protocol::generate_keypair();
    exit::ExitServer exit_server(server_keys);
    Bytes seen_by_exit;
    std::mutex seen_mutex;
    net::TcpServer recorder([&](net::TcpStream& s) {
        auto frame = exit::read_request_frame(s);
        if (!frame) return;
        {
            std::lock_guard lock(seen_mutex);
            seen_by_exit = *frame;
        }
        s.write_all(exit_server.handle_frame(*frame));
    });
    recorder.start("127.0.0.1", 0);
    auto port = recorder.port();
    Fixture f([port](const protocol::SocksAddress&, std::chrono::milliseconds t) {
        return net::TcpStream::connect(*net::IpAddress::parse("127.0.0.1"), port, t);
    });

    const std::string sentinel = "SENTINEL-plaintext-4242";
    auto client = protocol::generate_keypair();
    protocol::RequestPayload p;
    p.client_public_key = client.public_key;
    p.nonce = 1;
    protocol::DataMessage d;
    d.data = to_bytes(sentinel);
    d.original_length = d.compressed_length = static_cast<std::uint32_t>(d.data.size());
    p.message = d;
    protocol::PrivateRequestMessage msg;
    msg.server_address = protocol::SocksAddress::from_host("203.0.113.1", 9000);
    msg.encrypted_payload = protocol::seal(protocol::encode_payload(p), server_keys.public_key);
    http::Request req;
    req.method = "POST";
    req.headers.set(kModeHeader, "private");
    req.body = protocol::encode_request(msg);

    auto r = f.invoke(req);
    ASSERT_EQ(r.response.status, 200) << to_string(r.response.body);
    EXPECT_EQ(seen_by_exit, req.body);
    auto outer = protocol::decode_response_frame(r.response.body);
    ASSERT_TRUE(outer.sealed);
    auto reply = protocol::decode_response(protocol::open(protocol::SealedEnvelope::parse(outer.body), client));
    // Signature check fails first since the connection id was never issued.
    EXPECT_EQ(std::get<protocol::ErrorResponse>(reply).code, protocol::ErrorCode::auth);
    for (const auto* blob : {&req.body, &r.response.body}) {
        auto text = to_string(*blob);
        EXPECT_EQ(text.find(sentinel), std::string::npos);
    }
    recorder.stop();
}

TEST(Bridge, UnroutableExitFailsWithinBudget) {
    BridgeConfig cfg;
    cfg.exit_timeout = 1s;
    auto upstream = std::make_shared<FakeUpstream>();
    Bridge b(cfg, upstream, dial_exit);
    protocol::PrivateRequestMessage msg;
    // Nothing listens on port 1 of loopback.
    msg.server_address = protocol::SocksAddress::from_host("127.0.0.1", 1);
    msg.encrypted_payload = protocol::seal(to_bytes("x"), protocol::generate_keypair().public_key);
    http::Request req;
    req.method = "POST";
    req.headers.set(kModeHeader, "private");
    req.body = protocol::encode_request(msg);
    auto start = std::chrono::steady_clock::now();
    auto res = b.relay_private(req);
    EXPECT_EQ(res.status, 502);
    EXPECT_EQ(res.headers.get(kErrorHeader), "exit-unreachable");
    EXPECT_LT(test::elapsed_ms(start), 15000);
}

TEST(Bridge, MalformedPrivateFrameIs400) {
    Fixture f;
    http::Request req;
    req.method = "POST";
    req.headers.set(kModeHeader, "private");
    req.body = to_bytes("\x01\x02");
    EXPECT_EQ(f.invoke(req).response.status, 400);
    req.body = to_bytes("\x09garbage-frame");
    EXPECT_EQ(f.invoke(req).response.status, 400);
}

TEST(Bridge, StatelessAcrossIdenticalInvocations) {
    Fixture f;
    f.upstream->reply.body = to_bytes("same");
    auto a = f.invoke(vanilla("/x", "example.org"));
    auto b = f.invoke(vanilla("/x", "example.org"));
    EXPECT_EQ(a.response.status, b.response.status);
    EXPECT_EQ(a.response.body, b.response.body);
    EXPECT_EQ(a.response.headers, b.response.headers);
}

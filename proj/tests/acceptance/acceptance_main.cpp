// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "censorless/cost/cost_model.hpp"
#include "censorless/deployment.hpp"
#include "censorless/net/ssrf.hpp"
#include "censorless/platform/url.hpp"
#include "censorless/protocol/compression.hpp"
#include "censorless/proxy/local_proxy.hpp"
#include "censorless/proxy/socks5.hpp"
#include "censorless/sim/simulator.hpp"
#include "test_support.hpp"

using namespace censorless;
using namespace std::chrono_literals;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Failed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failed(what);
}

std::string rewritten(std::string s) {
    for (auto p = s.find("https:"); p != std::string::npos; p = s.find("https:", p)) s.replace(p, 6, "http:");
    return s;
}

std::string fmt(double v, int digits = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

// Records private-mode frames on their way to the bridge.
struct RecordingUpstream : http::Upstream {
    std::shared_ptr<http::Upstream> inner;
    std::mutex mutex;
    std::vector<Bytes> frames;

    explicit RecordingUpstream(std::shared_ptr<http::Upstream> i) : inner(std::move(i)) {}
    http::Response send(const http::Url& c, const http::Request& r) override {
        if (r.headers.get("X-CL-Mode") == "private") {
            std::lock_guard lock(mutex);
            frames.push_back(r.body);
        }
        return inner->send(c, r);
    }
    void send_streaming(const http::Url& c, const http::Request& r, const http::StreamHandler& h) override {
        inner->send_streaming(c, r, h);
    }
};

Outcome vanilla_fetch() {
    auto start = std::chrono::steady_clock::now();
    Deployment d(test::fast_deployment());
    d.start();
    auto cfg = d.proxy_config("acceptance-vanilla");
    cfg.migration_poll_interval = 0ms;
    proxy::LocalProxy p(cfg, d.client_upstream());
    p.start();

    auto html = test::proxy_get(p.port(), d.origin_url("/"));
    require(html.status == 200, "GET / status " + std::to_string(html.status));
    require(html.body == rewritten(http::TestOrigin::index_html()), "HTML body differs from rewritten origin body");

    auto json = test::proxy_get(p.port(), d.origin_url("/app.json"));
    require(json.body == rewritten(http::TestOrigin::app_json()), "JSON body not rewritten exactly");

    auto bin = test::proxy_get(p.port(), d.origin_url("/data.bin"));
    require(bin.body == to_string(http::TestOrigin::binary_blob()), "binary body altered");

    std::mt19937_64 rng(11);
    for (int i = 0; i < 8; ++i) {
        auto n = 1 + rng() % 200000;
        auto r = test::proxy_get(p.port(), d.origin_url("/bytes?n=" + std::to_string(n)));
        require(r.body == to_string(http::TestOrigin::deterministic_bytes(n)), "binary body of " + std::to_string(n) + " bytes altered");
    }
    p.stop();
    d.stop();
    double ms = test::elapsed_ms(start);
    require(ms < 5000, "took " + fmt(ms, 0) + " ms");
    return {true, "html/json rewritten, 9 binary bodies identical, " + fmt(ms, 0) + " ms"};
}

Outcome zero_drop_migration() {
    VirtualClock clock;
    auto cfg = test::fast_deployment();
    cfg.orchestrator.refresh_interval = 20s;
    cfg.orchestrator.grace = 15s;
    Deployment d(cfg, clock);
    d.start();
    auto pc = d.proxy_config("acceptance-migrate");
    pc.migration_poll_interval = 0ms;
    proxy::LocalProxy p(pc, d.client_upstream());

    std::set<std::string> urls;
    int ok = 0;
    for (int t = 0; t < 120; ++t) {
        clock.advance(1s);
        d.orchestrator().tick(clock.now());
        if (t % 5 == 0) p.fetch_migration();
        urls.insert(p.current_bridge());
        http::Request req;
        req.target = d.origin_url("/");
        auto res = p.fetch(req);
        require(res.status == 200, "request " + std::to_string(t) + " status " + std::to_string(res.status));
        auto log = d.platform().connection_log();
        require(!log.empty() && !log.back().function_id.empty(), "request " + std::to_string(t) + " not routed");
        auto info = d.platform().function(log.back().function_id);
        require(info && !info->deleted, "request " + std::to_string(t) + " served by a deleted function");
        auto managed = d.orchestrator().bridge(info->url);
        require(managed && managed->status != orchestrator::BridgeStatus::retired,
                "request " + std::to_string(t) + " served by a retired bridge");
        ++ok;
    }
    d.stop();
    require(urls.size() >= 5, "only " + std::to_string(urls.size()) + " bridge URLs observed");
    return {true, std::to_string(ok) + "/120 requests, " + std::to_string(urls.size()) + " bridge URLs"};
}

Outcome private_round_trip() {
    auto start = std::chrono::steady_clock::now();
    Deployment d(test::fast_deployment());
    d.start();
    auto cfg = d.proxy_config("acceptance-private", proxy::Mode::private_mode);
    cfg.migration_poll_interval = 0ms;
    auto recorder = std::make_shared<RecordingUpstream>(d.client_upstream());
    proxy::LocalProxy p(cfg, recorder);
    p.start();

    auto s = net::TcpStream::connect(*net::IpAddress::parse("127.0.0.1"), p.port(), 5s);
    s.set_timeout(20s);
    proxy::socks_connect(s, "127.0.0.1", d.echo().port());
    Bytes payload = http::TestOrigin::deterministic_bytes(1 << 20);
    std::thread writer([&] { s.write_all(payload); });
    Bytes back(payload.size());
    s.read_exact(back);
    writer.join();
    require(back == payload, "echoed MiB differs");
    s.close();

    Bytes captured;
    {
        std::lock_guard lock(recorder->mutex);
        require(!recorder->frames.empty(), "no private frame captured");
        captured = recorder->frames.front();
    }
    http::Request replay;
    replay.method = "POST";
    replay.headers.set("X-CL-Mode", "private");
    auto bridge = *http::parse_url(p.current_bridge());
    replay.headers.set("Host", bridge.host);
    replay.body = captured;
    auto res = d.client_upstream()->send(bridge, replay);
    require(res.status == 200, "replay relay status " + std::to_string(res.status));
    auto outer = protocol::decode_response_frame(res.body);
    Bytes plain = outer.sealed ? protocol::open(protocol::SealedEnvelope::parse(outer.body), *cfg.client_keypair) : outer.body;
    auto reply = protocol::decode_response(plain);
    auto* err = std::get_if<protocol::ErrorResponse>(&reply);
    require(err && err->code == protocol::ErrorCode::replay, "replayed frame was not rejected with REPLAY");
    p.stop();
    d.stop();
    double ms = test::elapsed_ms(start);
    require(ms < 30000, "took " + fmt(ms, 0) + " ms");
    return {true, "1 MiB echoed byte-identical, replay -> " + std::string(protocol::to_string(err->code)) + ", " +
                      fmt(ms, 0) + " ms"};
}

struct SsrfVector {
    const char* address;
    const char* reason;
};
const SsrfVector kSsrfVectors[] = {
#include "ssrf_vectors.inc"
};

Outcome ssrf_suite() {
    net::SsrfPolicy policy;
    std::set<std::string> categories;
    int n = 0;
    for (const auto& v : kSsrfVectors) {
        auto ip = net::IpAddress::parse(v.address);
        require(ip.has_value(), std::string("unparsable vector ") + v.address);
        auto d = policy.check(*ip);
        std::string got = d.denied ? std::string(net::to_string(*d.denied)) : "";
        std::string want = v.reason ? v.reason : "";
        require(got == want, std::string(v.address) + ": expected '" + want + "', got '" + got + "'");
        if (v.reason) categories.insert(v.reason);
        ++n;
    }
    require(categories.size() >= 7, "only " + std::to_string(categories.size()) + " deny categories covered");
    return {true, std::to_string(n) + " vectors exact, " + std::to_string(categories.size()) + " categories"};
}

Outcome fronting() {
    Deployment d(test::fast_deployment());
    d.start();
    auto run = [&](bool fronted, const std::string& id) {
        auto cfg = d.proxy_config(id);
        cfg.migration_poll_interval = 0ms;
        if (fronted) cfg.fronting = proxy::FrontingConfig{"front.lambda-url.us-east-1.on.aws"};
        proxy::LocalProxy p(cfg, d.client_upstream());
        http::Request req;
        req.target = d.origin_url("/");
        auto res = p.fetch(req);
        auto rec = d.platform().connection_log().back();
        return std::make_tuple(res, rec, http::parse_url(cfg.bridge_url)->host);
    };
    auto [fr, frec, fhost] = run(true, "acceptance-front");
    auto [pr, prec, phost] = run(false, "acceptance-plain");
    require(fr.status == 200 && pr.status == 200, "fetch failed");
    require(frec.sni == "front.lambda-url.us-east-1.on.aws" && frec.host == fhost, "fronted request not routed by Host");
    require(!frec.function_id.empty(), "fronted request not served");
    require(prec.sni == prec.host && prec.host == phost, "unfronted SNI differs from Host");
    require(fr.body == pr.body && fr.headers == pr.headers, "fronted and plain responses differ");

    // Direct emulator check: SNI naming another deployed function still
    // routes by Host.
    auto& platform = d.platform();
    auto fns = platform.functions();
    require(fns.size() >= 2, "need two functions");
    http::Request req;
    req.target = "/__migration";
    auto r = platform.invoke(fns[0].host, req, fns[1].host);
    require(r.status == platform::InvokeStatus::ok && r.function_id == fns[0].id, "emulator routed by SNI");
    d.stop();
    return {true, "SNI != Host routed by Host; plain mode identical with SNI == Host"};
}

Outcome simulation() {
    struct Target {
        const char* preset;
        double conn_lo, conn_hi, nonblocked_lo, nonblocked_hi;
    };
    const Target targets[] = {
        {"fig7", 0.90, 1.00, 0.90, 1.00},
        {"fig10", 0.59, 0.73, 0.80, 0.94},
        {"fig11-aggressive", 0.70, 0.84, 0.0, 1.0},
        {"fig11-optimal", 0.95, 1.00, 0.0, 1.0},
    };
    std::ostringstream detail;
    bool all = true;
    std::string failures;
    for (const auto& t : targets) {
        auto start = std::chrono::steady_clock::now();
        auto r = sim::run_seeds(*sim::preset(t.preset), 20);
        double ms = test::elapsed_ms(start);
        detail << t.preset << " " << fmt(r.mean_connected) << "/" << fmt(r.mean_nonblocked) << " (" << fmt(ms / 1000, 1)
               << " s) ";
        bool ok = r.mean_connected >= t.conn_lo && r.mean_connected <= t.conn_hi &&
                  r.mean_nonblocked >= t.nonblocked_lo && r.mean_nonblocked <= t.nonblocked_hi && ms < 60000;
        if (!ok) {
            all = false;
            failures += std::string(t.preset) + " ";
        }
    }
    require(all, "out of range: " + failures + "| " + detail.str());
    return {true, detail.str() + "over 20 seeds"};
}

Outcome cost_numbers() {
    auto vanilla = cost::monthly_vanilla_cost(6.76, 1000, 128).total_cents();
    auto priv = cost::monthly_private_cost(6.76, 1000, 128, 1).total_cents();
    require(vanilla == 0.27, "vanilla " + fmt(vanilla, 4));
    require(priv == 3.41, "private " + fmt(priv, 4));
    auto base = cost::spot_baseline_monthly();
    double r1 = base / vanilla, r2 = base / priv;
    require(std::abs(r1 - 34.4) <= 0.5, "vanilla ratio " + fmt(r1));
    require(std::abs(r2 - 2.72) <= 0.05, "private ratio " + fmt(r2));
    auto p300 = cost::daily_scaling_curve(300, 3600, 1);
    require(p300.censorless < 3.5 && p300.censorless_private < 3.5, "300-proxy daily cost too high");
    require(cost::round_cents(p300.spotproxy) == 11.49, "spot baseline " + fmt(p300.spotproxy, 4));
    return {true, "$0.27 / $3.41, ratios " + fmt(r1, 2) + "x / " + fmt(r2, 2) + "x, 300 proxies $" +
                      fmt(p300.censorless, 4) + " / $" + fmt(p300.censorless_private, 4) + " / $" +
                      fmt(p300.spotproxy, 2)};
}

Outcome protocol_properties() {
    std::mt19937_64 rng(2024);
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        switch (i % 3) {
            case 0: {
                auto m = test::random_payload(rng);
                if (protocol::decode_payload(protocol::encode_payload(m)) != m) ++mismatches;
                break;
            }
            case 1: {
                auto m = test::random_request(rng);
                if (protocol::decode_request(protocol::encode_request(m)) != m) ++mismatches;
                break;
            }
            default: {
                auto m = test::random_response(rng);
                if (protocol::decode_response(protocol::encode_response(m)) != m) ++mismatches;
            }
        }
    }
    require(mismatches == 0, std::to_string(mismatches) + " round-trip mismatches");

    int crashes = 0;
    for (int i = 0; i < 100000; ++i) {
        auto input = test::random_bytes(rng, rng() % 96);
        // Half the inputs start with a plausible type byte to reach deeper code.
        if (!input.empty() && i % 2) input[0] = static_cast<std::uint8_t>(1 + rng() % 4);
        for (int which = 0; which < 4; ++which) {
            try {
                switch (which) {
                    case 0: protocol::decode_payload(input); break;
                    case 1: protocol::decode_request(input); break;
                    case 2: protocol::decode_response(input); break;
                    default: protocol::decode_response_frame(input);
                }
            } catch (const protocol::DecodeError&) {
            } catch (...) {
                ++crashes;
            }
        }
    }
    require(crashes == 0, std::to_string(crashes) + " decoder inputs escaped as non-decode errors");

    auto keys = protocol::generate_keypair();
    int false_accepts = 0;
    for (int i = 0; i < 1000; ++i) {
        auto plain = test::random_bytes(rng, 1 + rng() % 512);
        auto wire = protocol::seal(plain, keys.public_key).serialize();
        auto bit = rng() % (wire.size() * 8);
        wire[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        try {
            protocol::open(protocol::SealedEnvelope::parse(wire), keys);
            ++false_accepts;
        } catch (const protocol::CryptoError&) {
        }
    }
    require(false_accepts == 0, std::to_string(false_accepts) + " tampered envelopes opened");
    return {true, "10^4 round trips, 10^5 fuzz inputs x4 decoders, 10^3 bit flips: 0 failures"};
}

Outcome emulator_properties() {
    VirtualClock clock;
    platform::EmulatorConfig ec;
    ec.cold_start = 400ms;
    platform::PlatformEmulator p(ec, clock);
    platform::Handler noop = [](platform::InvocationContext&, const http::Request&) { return http::Response{}; };
    std::set<std::string> urls;
    const char* regions[] = {"us-east-1", "eu-west-1", "ap-south-1"};
    for (int i = 0; i < 100000; ++i) {
        auto f = p.deploy(noop, regions[i % 3]);
        require(platform::parse_function_url(f.url).has_value(), "malformed URL " + f.url);
        urls.insert(f.url);
        if (i % 2) p.remove(f.id);
    }
    require(urls.size() == 100000, "duplicate URLs: " + std::to_string(100000 - urls.size()));

    // Scripted billing run: durations cycle through 1..200 ms.
    platform::FunctionConfig fc;
    fc.memory_mb = 512;
    int call = 0;
    auto billed = p.deploy(
        [&](platform::InvocationContext&, const http::Request&) {
            clock.advance(std::chrono::milliseconds(1 + (call++ % 200)));
            return http::Response{};
        },
        "us-east-1", fc);
    std::uint64_t expected_ms = 400;  // one cold start
    for (int i = 0; i < 1000; ++i) {
        expected_ms += 1 + (i % 200);
        auto r = p.invoke(billed.host, {});
        require(r.status == platform::InvokeStatus::ok, "invocation failed");
    }
    auto b = p.billing(billed.id);
    require(b.invocations == 1000, "invocations " + std::to_string(b.invocations));
    require(b.total_duration_ms == expected_ms, "duration " + std::to_string(b.total_duration_ms) + " != " +
                                                    std::to_string(expected_ms));
    require(b.mb_ms == expected_ms * 512, "mb_ms mismatch");
    double expected_gbs = static_cast<double>(expected_ms) / 1000.0 * 512.0 / 1024.0;
    require(std::abs(b.gb_seconds() - expected_gbs) < 1e-9, "GB-seconds " + fmt(b.gb_seconds(), 6));

    auto fresh = p.deploy(noop, "us-east-1");
    auto cold = p.invoke(fresh.host, {});
    auto warm = p.invoke(fresh.host, {});
    require(cold.cold && !warm.cold && cold.latency > warm.latency, "cold start not slower than warm");
    return {true, "10^5 unique URLs, billing " + std::to_string(b.total_duration_ms) + " ms / " +
                      fmt(b.gb_seconds(), 3) + " GB-s exact, cold " + std::to_string(cold.latency.count()) +
                      " ms > warm " + std::to_string(warm.latency.count()) + " ms"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 vanilla end-to-end fetch", vanilla_fetch},
        {"2 zero-drop live migration", zero_drop_migration},
        {"3 private-mode round trip", private_round_trip},
        {"4 SSRF suite", ssrf_suite},
        {"5 domain fronting", fronting},
        {"6 simulation reproduction", simulation},
        {"7 cost golden numbers", cost_numbers},
        {"8 protocol properties", protocol_properties},
        {"9 emulator properties", emulator_properties},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}

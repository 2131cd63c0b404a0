#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "censorless/cost/cost_model.hpp"
#include "censorless/net/ssrf.hpp"
#include "censorless/platform/url.hpp"
#include "censorless/protocol/compression.hpp"
#include "censorless/protocol/crypto.hpp"
#include "censorless/protocol/messages.hpp"
#include "censorless/sim/simulator.hpp"

namespace py = pybind11;
using namespace censorless;

namespace {

Bytes to_vec(const py::bytes& b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

template <std::size_t N>
std::array<std::uint8_t, N> to_array(const py::bytes& b, const char* what) {
    std::string s = b;
    if (s.size() != N) throw py::value_error(std::string(what) + ": expected " + std::to_string(N) + " bytes");
    std::array<std::uint8_t, N> out{};
    std::copy(s.begin(), s.end(), out.begin());
    return out;
}

template <typename C>
py::bytes to_py(const C& c) {
    return py::bytes(reinterpret_cast<const char*>(c.data()), c.size());
}

protocol::KeyPair keypair_from(const py::bytes& seed) {
    return protocol::generate_keypair(to_array<32>(seed, "seed"));
}

py::dict inner_to_dict(const protocol::InnerMessage& m) {
    py::dict d;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, protocol::StartConnection>) {
                d["type"] = "start";
                d["host"] = v.target.host();
                d["port"] = v.target.port;
            } else if constexpr (std::is_same_v<T, protocol::DataMessage>) {
                d["type"] = "data";
                d["connection"] = v.connection.id;
                d["compressed"] = v.compressed;
                d["original_length"] = v.original_length;
                d["data"] = to_py(v.data);
            } else {
                d["type"] = "close";
                d["connection"] = v.connection.id;
            }
        },
        m);
    return d;
}

}  // namespace

PYBIND11_MODULE(_censorless, m) {
    m.doc() = "Bindings for the CensorLess core library";

    py::register_exception<protocol::CryptoError>(m, "CryptoError", PyExc_ValueError);
    py::register_exception<protocol::DecodeError>(m, "DecodeError", PyExc_ValueError);
    py::register_exception<protocol::CompressionError>(m, "CompressionError", PyExc_ValueError);

    m.def(
        "keygen",
        [](std::optional<py::bytes> seed) {
            auto kp = seed ? keypair_from(*seed) : protocol::generate_keypair();
            return py::make_tuple(to_py(kp.secret_key.seed()), to_py(kp.public_key));
        },
        py::arg("seed") = py::none(), "Returns (seed, public_key).");
    m.def("seal", [](const py::bytes& plaintext, const py::bytes& recipient) {
        return to_py(protocol::seal(to_vec(plaintext), to_array<32>(recipient, "recipient")).serialize());
    });
    m.def("open", [](const py::bytes& envelope, const py::bytes& seed) {
        auto env = protocol::SealedEnvelope::parse(to_vec(envelope));
        return to_py(protocol::open(env, keypair_from(seed)));
    });
    m.def("sign", [](const py::bytes& message, const py::bytes& seed) {
        return to_py(protocol::sign(to_vec(message), keypair_from(seed).secret_key));
    });
    m.def("verify", [](const py::bytes& message, const py::bytes& signature, const py::bytes& public_key) {
        return protocol::verify(to_vec(message), to_array<64>(signature, "signature"),
                                to_array<32>(public_key, "public_key"));
    });
    m.def(
        "compress",
        [](const py::bytes& data) {
            auto c = protocol::compress(to_vec(data));
            return py::make_tuple(to_py(c.data), c.compressed);
        },
        "Returns (data, compressed).");
    m.def("decompress", [](const py::bytes& data, std::size_t original_length) {
        return to_py(protocol::decompress(to_vec(data), original_length));
    });

    m.def(
        "encode_start_payload",
        [](const py::bytes& client_public_key, std::uint64_t nonce, const std::string& host, std::uint16_t port) {
            protocol::RequestPayload p;
            p.client_public_key = to_array<32>(client_public_key, "client_public_key");
            p.nonce = nonce;
            p.message = protocol::StartConnection{protocol::SocksAddress::from_host(host, port)};
            return to_py(protocol::encode_payload(p));
        },
        py::arg("client_public_key"), py::arg("nonce"), py::arg("host"), py::arg("port"));
    m.def("decode_payload", [](const py::bytes& data) {
        auto p = protocol::decode_payload(to_vec(data));
        auto d = inner_to_dict(p.message);
        d["client_public_key"] = to_py(p.client_public_key);
        d["nonce"] = p.nonce;
        return d;
    });

    m.def(
        "ssrf_check",
        [](const std::string& address) -> std::optional<std::string> {
            auto ip = net::IpAddress::parse(address);
            if (!ip) throw py::value_error("not an IP address: " + address);
            auto decision = net::SsrfPolicy().check(*ip);
            if (decision.allowed()) return std::nullopt;
            return std::string(net::to_string(*decision.denied));
        },
        "Deny category for an IP literal, or None when allowed.");

    m.def("is_function_url", [](const std::string& url) { return platform::parse_function_url(url).has_value(); });

    m.def(
        "simulate",
        [](const std::string& preset, std::uint64_t seed, int seeds) {
            auto p = sim::preset(preset);
            if (!p) throw py::value_error("unknown preset: " + preset);
            p->seed = seed;
            sim::SimResult r;
            {
                py::gil_scoped_release release;
                r = sim::run_seeds(*p, seeds);
            }
            py::dict d;
            d["mean_connected"] = r.mean_connected;
            d["mean_nonblocked"] = r.mean_nonblocked;
            d["connected_ratio"] = r.series.connected_ratio;
            d["nonblocked_ratio"] = r.series.nonblocked_ratio;
            return d;
        },
        py::arg("preset"), py::arg("seed") = 1, py::arg("seeds") = 1);

    m.def("requests_for_traffic", [](double gb) { return cost::requests_for_traffic(gb); });
    m.def(
        "monthly_vanilla_cost",
        [](double gb, double duration_ms, double memory_mb) {
            return cost::monthly_vanilla_cost(gb, duration_ms, memory_mb).total();
        },
        py::arg("traffic_gb") = 6.76, py::arg("duration_ms") = 1000, py::arg("memory_mb") = 128);
    m.def(
        "monthly_private_cost",
        [](double gb, double duration_ms, double memory_mb, int n_vps) {
            try {
                return cost::monthly_private_cost(gb, duration_ms, memory_mb, n_vps).total();
            } catch (const std::invalid_argument& e) {
                throw py::value_error(e.what());
            }
        },
        py::arg("traffic_gb") = 6.76, py::arg("duration_ms") = 1000, py::arg("memory_mb") = 128,
        py::arg("n_vps") = 1);
    m.def("spot_baseline_monthly", [] { return cost::spot_baseline_monthly(); });
    m.def(
        "cost_table",
        [](const std::string& preset, const std::string& format) {
            cost::Table t;
            if (preset == "fig8") t = cost::fig8_table();
            else if (preset == "fig9") t = cost::fig9_table();
            else if (preset == "fig13") t = cost::fig13_table();
            else throw py::value_error("unknown preset: " + preset);
            return format == "csv" ? t.to_csv() : t.to_text();
        },
        py::arg("preset"), py::arg("format") = "text");
}

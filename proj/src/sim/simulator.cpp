#include "censorless/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "censorless/platform/url.hpp"

namespace censorless::sim {

void SimParams::validate() const {
    auto require = [](bool ok, const char* field) {
        if (!ok) throw std::invalid_argument(std::string("invalid simulation parameter: ") + field);
    };
    for (double b : beta) require(std::isfinite(b), "beta");
    for (double a : alpha) require(std::isfinite(a), "alpha");
    require(std::isfinite(utilization_cap) && utilization_cap >= 0, "utilization_cap");
    require(std::isfinite(omega), "omega");
    require(censor_block_delay >= 0, "censor_block_delay");
    require(censor_period >= 1, "censor_period");
    require(refresh_period >= 0, "refresh_period");
    require(censor_fraction >= 0 && censor_fraction <= 1, "censor_fraction");
    require(n_clients >= 1, "n_clients");
    require(n_proxies >= 1, "n_proxies");
    require(proxy_capacity >= 1, "proxy_capacity");
    require(horizon >= 1, "horizon");
    require(!candidate_waits.empty(), "candidate_waits");
    for (int w : candidate_waits) require(w >= 0, "candidate_waits");
}

double distance(const SimClient& client, const SimProxy& proxy) {
    return std::hypot(client.x - proxy.x, client.y - proxy.y);
}

double client_utility(const SimClient& client, const SimProxy& proxy, const SimParams& params) {
    const auto& b = params.beta;
    return b[0] * proxy.knowers + b[1] * proxy.connected + b[2] * proxy.alive_ticks - b[3] * distance(client, proxy);
}

namespace {

// Proxy-independent part of the proxy utility.
double client_score(const SimClient& client, const SimParams& params) {
    const auto& a = params.alpha;
    return a[0] * std::min<double>(client.utilization, params.utilization_cap) - a[1] * client.requests -
           a[2] * client.assigned_blocked - a[3] * client.known_blocked;
}

bool working(const SimState& state, const SimClient& client) {
    if (!client.proxy) return false;
    const auto& p = state.proxies[*client.proxy];
    return !p.blocked && !p.retired;
}

std::string fresh_identifier(SimState& state, const SimParams& params) {
    for (;;) {
        std::string id;
        if (params.identifiers == IdentifierKind::url) {
            std::uniform_int_distribution<int> region(0, 3);
            static constexpr const char* regions[] = {"us-east-1", "us-west-2", "eu-west-1", "ap-south-1"};
            id = platform::function_url(platform::random_function_id(state.rng), regions[region(state.rng)]);
        } else {
            std::uniform_int_distribution<int> octet(1, 254);
            std::ostringstream os;
            os << octet(state.rng) << '.' << octet(state.rng) << '.' << octet(state.rng) << '.' << octet(state.rng);
            id = os.str();
        }
        if (state.issued.insert(id).second) return id;
    }
}

void populate_pool(SimState& state, const SimParams& params) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    state.live.clear();
    for (int i = 0; i < params.n_proxies; ++i) {
        SimProxy p;
        p.url = fresh_identifier(state, params);
        p.x = unit(state.rng);
        p.y = unit(state.rng);
        state.live.push_back(state.proxies.size());
        state.proxies.push_back(std::move(p));
    }
}

void release(SimState& state, SimClient& client) {
    if (client.proxy) {
        auto& p = state.proxies[*client.proxy];
        if (p.connected > 0) --p.connected;
        client.proxy.reset();
    }
}

int honest_count(const SimState& state) {
    return static_cast<int>(std::count_if(state.clients.begin(), state.clients.end(),
                                          [](const SimClient& c) { return !c.is_censor_agent; }));
}

}  // namespace

double proxy_utility(const SimProxy& proxy, const SimClient& client, const SimParams& params) {
    return client_score(client, params) - params.alpha[4] * distance(client, proxy);
}

double blocked_client_ratio(const SimState& state) {
    int honest = 0;
    int stranded = 0;
    for (const auto& c : state.clients) {
        if (c.is_censor_agent) continue;
        ++honest;
        if (!working(state, c)) ++stranded;
    }
    return honest == 0 ? 0.0 : static_cast<double>(stranded) / honest;
}

double censor_utility(const SimState& state, const SimParams& params) {
    double discovery = 0;
    for (const auto& c : state.clients) {
        if (!c.is_censor_agent || state.live.empty()) continue;
        double sum = 0;
        for (auto idx : state.live) sum += proxy_utility(state.proxies[idx], c, params);
        discovery += sum / static_cast<double>(state.live.size());
    }
    return params.omega * discovery + blocked_client_ratio(state);
}

SimState make_initial_state(const SimParams& params) {
    params.validate();
    SimState state;
    state.rng.seed(params.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    int agents = static_cast<int>(std::lround(params.censor_fraction * params.n_clients));
    std::vector<int> order(params.n_clients);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), state.rng);
    state.clients.resize(params.n_clients);
    for (int i = 0; i < params.n_clients; ++i) {
        auto& c = state.clients[i];
        c.id = i;
        c.x = unit(state.rng);
        c.y = unit(state.rng);
    }
    for (int i = 0; i < agents; ++i) state.clients[order[i]].is_censor_agent = true;
    populate_pool(state, params);
    return state;
}

void assign_proxies(SimState& state, const SimParams& params) {
    std::vector<std::size_t> requesters;
    for (std::size_t i = 0; i < state.clients.size(); ++i) {
        auto& c = state.clients[i];
        bool probe_due = c.is_censor_agent && state.tick >= c.next_probe;
        if (probe_due) {
            c.next_probe = state.tick + params.censor_period;
            release(state, c);
            ++c.requests;
            requesters.push_back(i);
            continue;
        }
        if (!working(state, c)) {
            if (c.proxy) release(state, c);
            if (!c.is_censor_agent && state.tick >= c.retry_at) {
                ++c.requests;
                requesters.push_back(i);
            }
        }
    }
    if (requesters.empty()) return;

    // Random shuffle first so equal scores are served in random order.
    std::shuffle(requesters.begin(), requesters.end(), state.rng);
    std::stable_sort(requesters.begin(), requesters.end(), [&](std::size_t a, std::size_t b) {
        return client_score(state.clients[a], params) > client_score(state.clients[b], params);
    });

    std::vector<std::size_t> best;
    for (auto ci : requesters) {
        auto& c = state.clients[ci];
        double best_u = -std::numeric_limits<double>::infinity();
        best.clear();
        bool popularity = c.is_censor_agent && params.shared_intelligence;
        for (auto pi : state.live) {
            const auto& p = state.proxies[pi];
            if (p.blocked || (!popularity && p.connected >= params.proxy_capacity)) continue;
            double u = popularity ? client_utility(c, p, params) : proxy_utility(p, c, params);
            if (u > best_u) {
                best_u = u;
                best.assign(1, pi);
            } else if (u == best_u) {
                best.push_back(pi);
            }
        }
        if (best.empty()) continue;
        std::size_t chosen = best.size() == 1
                                 ? best.front()
                                 : best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(state.rng)];
        auto& p = state.proxies[chosen];
        c.proxy = chosen;
        ++p.connected;
        if (std::find(c.known_proxies.begin(), c.known_proxies.end(), chosen) == c.known_proxies.end()) {
            c.known_proxies.push_back(chosen);
            ++p.knowers;
        }
    }
}

void censor_step(SimState& state, const SimParams& params) {
    for (const auto& c : state.clients) {
        if (!c.is_censor_agent || !c.proxy) continue;
        auto& p = state.proxies[*c.proxy];
        if (p.discovered_at || p.retired) continue;
        p.discovered_at = state.tick;
        int wait = params.strategy == CensorStrategy::optimal ? state.censor_wait : 0;
        p.block_at = state.tick + params.censor_block_delay + wait;
    }
}

void apply_blocks(SimState& state, const SimParams& params) {
    for (auto idx : state.live) {
        auto& p = state.proxies[idx];
        if (p.blocked || !p.block_at || *p.block_at > state.tick) continue;
        p.blocked = true;
        p.blocked_at = state.tick;
        state.tombstones.insert(p.url);
    }
    for (auto& c : state.clients) {
        for (auto k : c.known_proxies) {
            const auto& p = state.proxies[k];
            if (p.blocked_at && *p.blocked_at == state.tick) {
                ++c.known_blocked;
                if (c.proxy == k) ++c.assigned_blocked;
            }
        }
        if (c.proxy && state.proxies[*c.proxy].blocked) {
            release(state, c);
            c.retry_at = params.refresh_period > 0 ? std::numeric_limits<int>::max() : state.tick + 1;
        }
    }
}

void refresh_step(SimState& state, const SimParams& params) {
    for (auto idx : state.live) state.proxies[idx].retired = true;
    for (auto& c : state.clients) {
        c.proxy.reset();
        if (c.is_censor_agent) c.next_probe = state.tick;
        c.retry_at = state.tick;
    }
    populate_pool(state, params);
}

namespace {

// Blocks, assignment, discovery and per-tick bookkeeping; no refresh and no
// metrics.
void play_tick(SimState& state, const SimParams& params) {
    apply_blocks(state, params);
    assign_proxies(state, params);
    censor_step(state, params);
    for (auto idx : state.live) {
        auto& p = state.proxies[idx];
        if (!p.blocked) ++p.alive_ticks;
    }
    for (auto& c : state.clients) {
        if (!c.is_censor_agent && working(state, c)) ++c.utilization;
    }
}

}  // namespace

void step(SimState& state, const SimParams& params) {
    bool refresh_due = params.refresh_period > 0 && state.tick > 0 && state.tick % params.refresh_period == 0;
    if (refresh_due) refresh_step(state, params);
    bool window_start = params.refresh_period > 0 ? (state.tick == 0 || refresh_due)
                                                  : state.tick % params.censor_period == 0;
    if (params.strategy == CensorStrategy::optimal && window_start)
        state.censor_wait = choose_censor_wait(state, params);

    play_tick(state, params);

    int nonblocked = 0;
    for (auto idx : state.live)
        if (!state.proxies[idx].blocked) ++nonblocked;
    state.series.connected_ratio.push_back(1.0 - blocked_client_ratio(state));
    state.series.nonblocked_ratio.push_back(static_cast<double>(nonblocked) / params.n_proxies);
    ++state.tick;
}

int choose_censor_wait(const SimState& state, const SimParams& params) {
    int lookahead = params.refresh_period > 0 ? params.refresh_period : params.censor_period;
    int best_wait = params.candidate_waits.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (int wait : params.candidate_waits) {
        SimState trial = state;
        trial.censor_wait = wait;
        // The trial branch must not consume the real run's randomness.
        trial.rng.seed(params.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(state.tick + 1)));
        double total = 0;
        for (int i = 0; i < lookahead; ++i) {
            play_tick(trial, params);
            total += censor_utility(trial, params);
            ++trial.tick;
        }
        if (total > best_value) {
            best_value = total;
            best_wait = wait;
        }
    }
    return best_wait;
}

SimResult run(const SimParams& params) {
    SimState state = make_initial_state(params);
    while (state.tick < params.horizon) step(state, params);
    SimResult result;
    result.series = std::move(state.series);
    auto mean = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    result.mean_connected = mean(result.series.connected_ratio);
    result.mean_nonblocked = mean(result.series.nonblocked_ratio);
    return result;
}

SimResult run_seeds(const SimParams& params, int n_seeds) {
    if (n_seeds < 1) throw std::invalid_argument("invalid simulation parameter: seeds");
    SimResult total;
    for (int i = 0; i < n_seeds; ++i) {
        SimParams p = params;
        p.seed = params.seed + static_cast<std::uint64_t>(i);
        auto r = run(p);
        total.mean_connected += r.mean_connected;
        total.mean_nonblocked += r.mean_nonblocked;
        if (i == 0) {
            total.series.connected_ratio.assign(r.series.connected_ratio.size(), 0.0);
            total.series.nonblocked_ratio.assign(r.series.nonblocked_ratio.size(), 0.0);
        }
        for (std::size_t t = 0; t < r.series.connected_ratio.size(); ++t) {
            total.series.connected_ratio[t] += r.series.connected_ratio[t];
            total.series.nonblocked_ratio[t] += r.series.nonblocked_ratio[t];
        }
    }
    // divide once at the end; summing 1/n pieces drifts past 1.0
    total.mean_connected /= n_seeds;
    total.mean_nonblocked /= n_seeds;
    for (auto& v : total.series.connected_ratio) v /= n_seeds;
    for (auto& v : total.series.nonblocked_ratio) v /= n_seeds;
    return total;
}

std::optional<SimParams> preset(std::string_view name) {
    SimParams p;
    if (name == "fig7") {
        p.strategy = CensorStrategy::optimal;
        p.refresh_period = 2 * p.censor_period;
    } else if (name == "fig10") {
        p.strategy = CensorStrategy::aggressive;
        p.refresh_period = 2 * p.censor_period;
    } else if (name == "fig11" || name == "fig11-aggressive") {
        p.strategy = CensorStrategy::aggressive;
        p.refresh_period = p.censor_period;
    } else if (name == "fig11-optimal") {
        p.strategy = CensorStrategy::optimal;
        p.refresh_period = p.censor_period;
    } else {
        return std::nullopt;
    }
    return p;
}

std::string to_csv(const MetricsSeries& series) {
    std::ostringstream os;
    os << "tick,connected_ratio,nonblocked_ratio\n";
    os.setf(std::ios::fixed);
    os.precision(6);
    for (std::size_t i = 0; i < series.connected_ratio.size(); ++i)
        os << i << ',' << series.connected_ratio[i] << ',' << series.nonblocked_ratio[i] << '\n';
    return os.str();
}

}  // namespace censorless::sim

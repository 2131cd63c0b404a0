#pragma once

// Agent-based proxy-distribution vs. censorship game.
//
// Honest clients and censor agents request proxies from a distributor that
// ranks requesters with the proxy utility function. Censor agents leak every
// proxy they learn to the censor, which blocks it after a fixed delay
// (aggressive) or after a waiting time chosen by one-period lookahead of the
// censor utility (optimal). Proxies are identified by one-time URLs and the
// whole pool is rotated every refresh period.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

namespace censorless::sim {

enum class CensorStrategy { aggressive, optimal };
enum class IdentifierKind { url, ip };

struct SimParams {
    std::array<double, 4> beta{1, 1, 1, 1};
    std::array<double, 5> alpha{2, 1, 1, 2, 10};
    double utilization_cap = 10;  // upper bound on the utilization term
    double omega = 1;
    // Blocks take effect at the start of a tick, before that tick's
    // discoveries, so 0 behaves like 1.
    int censor_block_delay = 2;
    // Length of the censor's discovery cycle: each agent asks for a fresh
    // proxy once per cycle.
    int censor_period = 7;
    // 0 disables rotation.
    int refresh_period = 14;
    double censor_fraction = 0.5;
    int n_clients = 200;
    int n_proxies = 7;
    // Maximum simultaneous honest clients a proxy accepts.
    int proxy_capacity = 40;
    int horizon = 500;
    std::uint64_t seed = 1;
    CensorStrategy strategy = CensorStrategy::aggressive;
    // Agents pool what they learn and each probe targets the live proxy that
    // ranks highest under the client utility (the most widely known one),
    // bypassing capacity. When false an agent takes whatever the distributor
    // hands it, like an honest client.
    bool shared_intelligence = true;
    IdentifierKind identifiers = IdentifierKind::url;
    std::vector<int> candidate_waits{0, 1, 2, 4, 8};

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct SimProxy {
    std::string url;
    double x = 0, y = 0;
    int knowers = 0;      // users who have ever been given this proxy
    int connected = 0;    // users currently assigned
    int alive_ticks = 0;  // total time utilization
    bool blocked = false;
    bool retired = false;
    std::optional<int> discovered_at;
    std::optional<int> block_at;
    std::optional<int> blocked_at;
};

struct SimClient {
    int id = 0;
    bool is_censor_agent = false;
    double x = 0, y = 0;
    int utilization = 0;       // ticks spent using a working proxy
    int requests = 0;          // R: new-address requests
    int assigned_blocked = 0;  // gamma: assigned proxies blocked under it
    int known_blocked = 0;     // delta: blocked proxies it had learned
    std::optional<std::size_t> proxy;  // index into SimState::proxies
    std::vector<std::size_t> known_proxies;
    int next_probe = 0;
    int retry_at = 0;
};

struct MetricsSeries {
    std::vector<double> connected_ratio;
    std::vector<double> nonblocked_ratio;
};

struct SimState {
    int tick = 0;
    std::vector<SimClient> clients;
    std::vector<SimProxy> proxies;  // every proxy ever created
    std::vector<std::size_t> live;  // indices of the current pool
    std::unordered_set<std::string> tombstones;
    std::unordered_set<std::string> issued;
    int censor_wait = 0;  // extra wait chosen by the optimal censor
    MetricsSeries series;
    std::mt19937_64 rng;
};

double distance(const SimClient& client, const SimProxy& proxy);

/// beta1*B + beta2*c + beta3*tau - beta4*d
double client_utility(const SimClient& client, const SimProxy& proxy, const SimParams& params);

/// alpha1*min(T, Tcap) - alpha2*R - alpha3*gamma - alpha4*delta - alpha5*d
double proxy_utility(const SimProxy& proxy, const SimClient& client, const SimParams& params);

/// omega * sum over agents of the mean proxy utility across the live pool,
/// plus the fraction of honest clients without a working proxy.
double censor_utility(const SimState& state, const SimParams& params);

/// Fraction of honest clients without a working proxy.
double blocked_client_ratio(const SimState& state);

SimState make_initial_state(const SimParams& params);

/// Serves every requesting client: honest clients without a working proxy
/// (after a block they wait for the next refresh, since new URLs are only
/// handed out then) and agents whose probe is due. Honest clients get the
/// live unblocked proxy with spare capacity maximizing proxy_utility, served
/// in decreasing order of their proxy-independent score.
void assign_proxies(SimState& state, const SimParams& params);

/// Records discoveries made by agents this tick and schedules blocks.
void censor_step(SimState& state, const SimParams& params);

/// Applies blocks that fall due at the current tick.
void apply_blocks(SimState& state, const SimParams& params);

/// Replaces the whole pool with fresh proxies and drops every assignment.
void refresh_step(SimState& state, const SimParams& params);

/// Advances one tick and appends metrics.
void step(SimState& state, const SimParams& params);

/// Picks the optimal censor's extra wait by simulating one refresh period
/// ahead for each candidate and maximizing mean censor utility. Ties go to
/// the shorter wait.
int choose_censor_wait(const SimState& state, const SimParams& params);

struct SimResult {
    MetricsSeries series;
    double mean_connected = 0;
    double mean_nonblocked = 0;
};

SimResult run(const SimParams& params);

/// Runs seeds params.seed .. params.seed + n_seeds - 1 and averages the
/// per-run means and the per-tick series.
SimResult run_seeds(const SimParams& params, int n_seeds);

/// Named parameter sets reproducing the reported scenarios: fig7, fig10,
/// fig11-aggressive, fig11-optimal.
std::optional<SimParams> preset(std::string_view name);

std::string to_csv(const MetricsSeries& series);

}  // namespace censorless::sim

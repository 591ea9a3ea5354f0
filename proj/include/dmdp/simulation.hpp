#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dmdp/graph_coder.hpp"
#include "dmdp/mdp.hpp"

namespace dmdp {

/// Sample mean with a 95% normal-approximation half width.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    double half_width = 0.0;

    double lower() const { return mean - half_width; }
    double upper() const { return mean + half_width; }
    bool contains(double x) const { return x >= lower() && x <= upper(); }
};

Estimate summarize(const std::vector<double>& samples);

struct Trajectory {
    double discounted_reward = 0.0;
    /// beta^horizon r_max / (1 - beta): bound on the truncated tail.
    double tail_bound = 0.0;
    /// Per-slot averages over the final 80% of the horizon.
    double throughput = 0.0;
    double drops = 0.0;
    double bits = 0.0;
    double reward = 0.0;
    /// State visit counts over the same window.
    std::vector<std::int64_t> visits;
};

/// One episode of the chain under phi from the initial distribution. Throughput and drops
/// are the per-(state, action) channels of the model (throughput falls back to the mean
/// reward); bits are |e(s)| of the visited state.
Trajectory rollout(const FactoredMdp& mdp, const ControlMap& phi, const EncoderVec& enc, int horizon,
                   std::mt19937_64& rng);

struct RolloutStats {
    int episodes = 0;
    int horizon = 0;
    std::uint64_t seed = 0;
    Estimate discounted_reward;
    Estimate throughput;
    Estimate drops;
    Estimate bits;
    double tail_bound = 0.0;
};

/// Generator for episode `episode` of a run seeded with `seed`.
std::mt19937_64 episode_rng(std::uint64_t seed, std::uint64_t episode);

RolloutStats estimate(const FactoredMdp& mdp, const ControlMap& phi, const EncoderVec& enc, int episodes,
                      int horizon, std::uint64_t seed);

struct StatsRow {
    std::string model_id;
    std::string phi_id;
    std::string enc_id;
    RolloutStats stats;
};

/// Versioned CSV of stats rows.
std::string stats_csv(const std::vector<StatsRow>& rows);

} // namespace dmdp

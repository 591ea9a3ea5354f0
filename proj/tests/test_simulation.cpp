#include <doctest.h>

#include "dmdp/error.hpp"
#include "dmdp/markov_chain.hpp"
#include "dmdp/simulation.hpp"
#include "dmdp/wireless.hpp"
#include "support.hpp"

using namespace dmdp;

namespace {

EncoderVec mis_for(const FactoredMdp& mdp, const ControlMap& phi) {
    auto marg = node_marginals(mdp.indexer(), discounted_occupancy(mdp, phi, true).weights);
    return mis_encoder(mdp.indexer(), phi, marg, full_supports(mdp.indexer()), LengthModel::huffman);
}

}  // namespace

TEST_CASE("deterministic single state") {
    FactoredMdp mdp({{"x", {"only"}}}, {"a"}, {Matrix::Ones(1, 1)}, {Matrix::Constant(1, 1, 2.0)}, 0.5,
                    Vector::Ones(1));
    ControlMap phi = ControlMap::constant(1, 0);
    auto enc = mis_for(mdp, phi);
    auto st = estimate(mdp, phi, enc, 10, 60, 1);
    CHECK(st.discounted_reward.mean == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(st.discounted_reward.half_width == 0.0);
    CHECK(st.throughput.mean == doctest::Approx(2.0));
    CHECK(st.bits.mean == 0.0);
    CHECK(st.tail_bound == doctest::Approx(std::pow(0.5, 60) * 2.0 / 0.5));
}

TEST_CASE("zero reward model") {
    std::mt19937_64 rng(1);
    auto mdp = testing::random_mdp(rng, {2, 2}, 2, 0.9);
    std::vector<Matrix> zero(2, Matrix::Zero(4, 4));
    FactoredMdp z(mdp.locals(), mdp.actions(), {mdp.kernel(0), mdp.kernel(1)}, zero, 0.9, mdp.initial());
    auto phi = ControlMap::constant(4, 1);
    auto st = estimate(z, phi, mis_for(z, phi), 20, 100, 3);
    CHECK(st.discounted_reward.mean == 0.0);
    CHECK(st.throughput.mean == 0.0);
    CHECK(st.drops.mean == 0.0);
}

TEST_CASE("same seed gives identical statistics") {
    auto mdp = build_mdp(binary_channel_config());
    auto phi = extract_policy(mdp, value_iteration(mdp, 1e-10));
    auto enc = mis_for(mdp, phi);
    auto a = estimate(mdp, phi, enc, 30, 200, 99);
    auto b = estimate(mdp, phi, enc, 30, 200, 99);
    auto c = estimate(mdp, phi, enc, 30, 200, 100);
    CHECK(a.discounted_reward.mean == b.discounted_reward.mean);
    CHECK(a.throughput.mean == b.throughput.mean);
    CHECK(a.bits.half_width == b.bits.half_width);
    CHECK(a.discounted_reward.mean != c.discounted_reward.mean);
    CHECK(stats_csv({{"m", "p", "e", a}}) == stats_csv({{"m", "p", "e", b}}));
}

TEST_CASE("infeasible pairs and bad arguments are rejected") {
    auto mdp = build_mdp(binary_channel_config());
    auto phi = extract_policy(mdp, value_iteration(mdp, 1e-10));
    auto blind = mis_for(mdp, ControlMap::constant(mdp.num_states(), 0));
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(rollout(mdp, phi, blind, 10, rng), ValidationError);
    CHECK_THROWS_AS(rollout(mdp, phi, mis_for(mdp, phi), 0, rng), ValidationError);
    CHECK_THROWS_AS(estimate(mdp, phi, mis_for(mdp, phi), 0, 10, 1), ValidationError);
}

TEST_CASE("visit frequencies match the stationary distribution") {
    std::mt19937_64 gen(4);
    auto mdp = testing::random_mdp(gen, {5}, 2, 0.9, 0.0);
    ControlMap phi(std::vector<int>{0, 1, 0, 1, 1});
    auto rng = episode_rng(5, 0);
    const int horizon = 100000;
    auto t = rollout(mdp, phi, mis_for(mdp, phi), horizon, rng);
    Vector d = stationary_distribution(mdp, phi);
    const double n = horizon - horizon / 5;
    double chi2 = 0.0;
    for (int s = 0; s < 5; ++s) {
        const double expected = n * d(s);
        chi2 += (t.visits[s] - expected) * (t.visits[s] - expected) / expected;
    }
    // Loose bound: Markov dependence inflates the statistic relative to i.i.d. sampling.
    CHECK(chi2 < 60.0);
}

TEST_CASE("Monte Carlo reward is consistent with the analytic value") {
    auto mdp = build_mdp(quad_channel_config());
    auto v = value_iteration(mdp, 1e-10);
    auto phi = extract_policy(mdp, v);
    auto st = estimate(mdp, phi, mis_for(mdp, phi), 400, 300, 2024);
    const double analytic = mdp.initial().dot(v.values);
    CHECK(std::abs(st.discounted_reward.mean - analytic) < 3.0 * st.discounted_reward.std_error + st.tail_bound);
}

TEST_CASE("summaries") {
    auto e = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(e.mean == doctest::Approx(2.5));
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(e.half_width == doctest::Approx(1.96 * e.std_error));
    CHECK(e.contains(2.5));
    CHECK(summarize({7.0}).half_width == 0.0);
}

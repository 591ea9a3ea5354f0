#include <doctest.h>

#include "dmdp/policy_evaluator.hpp"
#include "support.hpp"

using namespace dmdp;

TEST_CASE("scores match direct evaluation") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto mdp = testing::random_mdp(rng, {2, 3}, 3, 0.9);
        const int S = mdp.num_states();
        Vector cost(S);
        for (int s = 0; s < S; ++s) cost(s) = u(rng);
        PolicyEvaluator ev(mdp, ControlMap::constant(S, 0), cost);
        CHECK(ev.objective() == doctest::Approx(expected_discounted_reward(mdp, ev.policy(), cost)).epsilon(1e-12));
        std::uniform_int_distribution<int> state(0, S - 1), action(0, 2);
        for (int step = 0; step < 30; ++step) {
            std::vector<int> moved{state(rng), state(rng)};
            const int a = action(rng);
            ControlMap next = ev.policy();
            for (int s : moved) next[s] = a;
            const double direct = expected_discounted_reward(mdp, next, cost);
            CHECK(ev.score(moved, a) == doctest::Approx(direct).epsilon(1e-10));
            ev.apply(moved, a);
            CHECK(ev.policy() == next);
            CHECK(ev.objective() == doctest::Approx(direct).epsilon(1e-10));
        }
        auto occ = discounted_occupancy(mdp, ev.policy());
        CHECK((ev.occupancy() - occ.weights).cwiseAbs().maxCoeff() < 1e-9);
        Matrix a = Matrix::Identity(S, S) - 0.9 * transition_matrix(mdp, ev.policy());
        Vector v = a.partialPivLu().solve(policy_reward(mdp, ev.policy()) - cost);
        CHECK((ev.values() - v).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("incremental updates survive long sequences") {
    std::mt19937_64 rng(13);
    auto mdp = testing::random_mdp(rng, {4, 2}, 2, 0.95);
    const int S = mdp.num_states();
    PolicyEvaluator ev(mdp, ControlMap::constant(S, 0));
    ev.set_refactor_interval(1 << 20);
    std::uniform_int_distribution<int> state(0, S - 1), action(0, 1);
    for (int step = 0; step < 2000; ++step) {
        int s = state(rng);
        ev.apply(std::span<const int>(&s, 1), action(rng));
    }
    CHECK(ev.objective() == doctest::Approx(expected_discounted_reward(mdp, ev.policy())).epsilon(1e-8));
    ev.refactor();
    CHECK(ev.objective() == doctest::Approx(expected_discounted_reward(mdp, ev.policy())).epsilon(1e-12));
}

TEST_CASE("changing the cost keeps the factorization") {
    std::mt19937_64 rng(14);
    auto mdp = testing::random_mdp(rng, {3}, 2, 0.8);
    PolicyEvaluator ev(mdp, ControlMap::constant(3, 1));
    Vector cost = Vector::Constant(3, 0.25);
    ev.set_cost(cost);
    CHECK(ev.objective() == doctest::Approx(expected_discounted_reward(mdp, ev.policy()) - 0.25 / 0.2));
}

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dmdp/coding.hpp"
#include "dmdp/graph_coder.hpp"
#include "dmdp/mdp.hpp"

namespace testing {

using dmdp::Matrix;
using dmdp::Vector;

inline Vector random_distribution(std::mt19937_64& rng, int n, double zero_prob = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector p(n);
    for (int i = 0; i < n; ++i) p(i) = u(rng) < zero_prob ? 0.0 : u(rng) + 1e-3;
    if (p.sum() == 0.0) p(std::uniform_int_distribution<int>(0, n - 1)(rng)) = 1.0;
    return p / p.sum();
}

/// Random factored model: dense kernel rows with some zeros, rewards in [0, 1).
inline dmdp::FactoredMdp random_mdp(std::mt19937_64& rng, const std::vector<int>& radices, int actions,
                                    double discount, double zero_prob = 0.3) {
    std::vector<dmdp::LocalStateSpace> locals;
    for (std::size_t n = 0; n < radices.size(); ++n) {
        dmdp::LocalStateSpace l{"n" + std::to_string(n + 1), {}};
        for (int x = 0; x < radices[n]; ++x) l.symbols.push_back(std::to_string(x));
        locals.push_back(l);
    }
    dmdp::StateIndexer ix(radices);
    const int S = ix.size();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Matrix> kernel, reward;
    std::vector<std::string> names;
    for (int a = 0; a < actions; ++a) {
        Matrix k(S, S);
        for (int s = 0; s < S; ++s) k.row(s) = random_distribution(rng, S, zero_prob).transpose();
        kernel.push_back(k);
        Matrix r(S, S);
        for (int s = 0; s < S; ++s)
            for (int j = 0; j < S; ++j) r(s, j) = u(rng);
        reward.push_back(r);
        names.push_back("a" + std::to_string(a));
    }
    Vector init = Vector::Zero(S);
    init(0) = 1.0;
    return dmdp::FactoredMdp(locals, names, kernel, reward, discount, init);
}

/// sum_{t < terms} beta^t P^t r.
inline Vector series_value(const Matrix& p, const Vector& r, double beta, int terms) {
    Vector acc = Vector::Zero(r.size());
    Vector term = r;
    for (int t = 0; t < terms; ++t) {
        acc += term;
        term = beta * (p * term);
    }
    return acc;
}

/// sum_{t < terms} beta^t pi P^t.
inline Vector series_occupancy(const Matrix& p, const Vector& pi, double beta, int terms) {
    Vector acc = Vector::Zero(pi.size());
    Vector term = pi;
    for (int t = 0; t < terms; ++t) {
        acc += term;
        term = beta * (p.transpose() * term);
    }
    return acc;
}

/// Block probabilities of a partition under a marginal.
inline std::vector<double> block_masses(const dmdp::Partition& part, const Vector& marginal) {
    std::vector<double> m;
    for (const auto& b : part) {
        double s = 0.0;
        for (int x : b) s += marginal(x);
        m.push_back(s);
    }
    return m;
}

inline double block_cost(const std::vector<double>& masses, dmdp::LengthModel model) {
    if (model == dmdp::LengthModel::huffman) return dmdp::huffman_expected_length(masses);
    double h = 0.0;
    for (double p : masses) h += dmdp::entropy_term(p);
    return h;
}

/// Brute-force minimum rate over encoder pairs for N = 2: every pair of partitions of the
/// positive supports whose message rectangles each admit one common candidate action.
inline double brute_force_pair_rate(const dmdp::StateIndexer& ix, const dmdp::CandidateSet& cand,
                                    const std::vector<Vector>& marg, dmdp::LengthModel model) {
    std::vector<std::vector<int>> support(2);
    for (int n = 0; n < 2; ++n)
        for (int x = 0; x < ix.radix(n); ++x)
            if (marg[n](x) > 0.0) support[n].push_back(x);
    auto parts0 = dmdp::set_partitions(support[0]);
    auto parts1 = dmdp::set_partitions(support[1]);
    double best = INFINITY;
    for (const auto& p0 : parts0) {
        const double c0 = block_cost(block_masses(p0, marg[0]), model);
        for (const auto& p1 : parts1) {
            bool ok = true;
            for (const auto& b0 : p0) {
                for (const auto& b1 : p1) {
                    dmdp::ActionMask m = ~dmdp::ActionMask{0};
                    for (int x : b0)
                        for (int y : b1) {
                            int s[2] = {x, y};
                            m &= cand.allowed[ix.index(s)];
                        }
                    if (!m) ok = false;
                }
            }
            if (ok) best = std::min(best, c0 + block_cost(block_masses(p1, marg[1]), model));
        }
    }
    return best;
}

/// Random candidate sets over a product space: each state allows a random nonempty subset.
inline dmdp::CandidateSet random_candidates(std::mt19937_64& rng, int states, int actions) {
    dmdp::CandidateSet c;
    c.num_actions = actions;
    std::uniform_int_distribution<int> pick(1, (1 << actions) - 1);
    for (int s = 0; s < states; ++s) c.allowed.push_back(static_cast<dmdp::ActionMask>(pick(rng)));
    return c;
}

inline bool nondecreasing(const std::vector<double>& trace, double rel = 1e-9) {
    for (std::size_t k = 1; k < trace.size(); ++k)
        if (trace[k] < trace[k - 1] - rel * std::max(1.0, std::abs(trace[k - 1]))) return false;
    return true;
}

} // namespace testing

#include "dmdp/markov_chain.hpp"

#include <algorithm>

#include "dmdp/error.hpp"

namespace dmdp {
namespace {

std::vector<std::vector<int>> adjacency(const Matrix& p, bool reverse) {
    const int S = static_cast<int>(p.rows());
    std::vector<std::vector<int>> adj(S);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
            if (p(i, j) > 0.0) adj[reverse ? j : i].push_back(reverse ? i : j);
    return adj;
}

// Kosaraju with explicit stacks; returns component id per state.
std::vector<int> strongly_connected(const Matrix& p, int& count) {
    const int S = static_cast<int>(p.rows());
    auto fwd = adjacency(p, false);
    auto rev = adjacency(p, true);
    std::vector<int> order;
    order.reserve(S);
    std::vector<char> seen(S, 0);
    for (int root = 0; root < S; ++root) {
        if (seen[root]) continue;
        std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
        seen[root] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < fwd[v].size()) {
                int w = fwd[v][next++];
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                order.push_back(v);
                stack.pop_back();
            }
        }
    }
    std::vector<int> comp(S, -1);
    count = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] >= 0) continue;
        std::vector<int> stack{*it};
        comp[*it] = count;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : rev[v])
                if (comp[w] < 0) {
                    comp[w] = count;
                    stack.push_back(w);
                }
        }
        ++count;
    }
    return comp;
}

Vector class_stationary(const Matrix& p, const std::vector<int>& members) {
    const int k = static_cast<int>(members.size());
    Matrix a(k, k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) a(r, c) = p(members[c], members[r]);
    a -= Matrix::Identity(k, k);
    a.row(k - 1).setOnes();
    Vector rhs = Vector::Zero(k);
    rhs(k - 1) = 1.0;
    Vector mu = a.fullPivLu().solve(rhs);
    if (!mu.allFinite()) throw NumericError("stationary solve failed");
    mu = mu.cwiseMax(0.0);
    return mu / mu.sum();
}

} // namespace

std::vector<std::vector<int>> closed_classes(const Matrix& transition) {
    if (transition.rows() != transition.cols()) throw ValidationError("transition must be square");
    const int S = static_cast<int>(transition.rows());
    int count = 0;
    std::vector<int> comp = strongly_connected(transition, count);
    std::vector<char> leaks(count, 0);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
            if (transition(i, j) > 0.0 && comp[i] != comp[j]) leaks[comp[i]] = 1;
    std::vector<std::vector<int>> classes(count);
    for (int i = 0; i < S; ++i)
        if (!leaks[comp[i]]) classes[comp[i]].push_back(i);
    std::erase_if(classes, [](const auto& c) { return c.empty(); });
    std::sort(classes.begin(), classes.end());
    return classes;
}

std::vector<bool> reachable_states(const Matrix& transition, const Vector& initial) {
    const int S = static_cast<int>(transition.rows());
    std::vector<bool> seen(S, false);
    std::vector<int> stack;
    for (int i = 0; i < S; ++i)
        if (initial(i) > 0.0) {
            seen[i] = true;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w = 0; w < S; ++w)
            if (transition(v, w) > 0.0 && !seen[w]) {
                seen[w] = true;
                stack.push_back(w);
            }
    }
    return seen;
}

Vector long_run_distribution(const Matrix& transition, const Vector& initial) {
    const int S = static_cast<int>(transition.rows());
    if (initial.size() != S) throw ValidationError("initial distribution has wrong length");
    auto classes = closed_classes(transition);
    std::vector<int> klass(S, -1);
    for (int c = 0; c < static_cast<int>(classes.size()); ++c)
        for (int s : classes[c]) klass[s] = c;

    std::vector<int> transient;
    for (int s = 0; s < S; ++s)
        if (klass[s] < 0) transient.push_back(s);

    // Expected visits to transient states, then flow into each class.
    Vector mass = Vector::Zero(static_cast<Eigen::Index>(classes.size()));
    for (int s = 0; s < S; ++s)
        if (klass[s] >= 0) mass(klass[s]) += initial(s);
    if (!transient.empty()) {
        const int t = static_cast<int>(transient.size());
        Matrix a = Matrix::Identity(t, t);
        Vector pi_t(t);
        for (int r = 0; r < t; ++r) {
            pi_t(r) = initial(transient[r]);
            for (int c = 0; c < t; ++c) a(r, c) -= transition(transient[r], transient[c]);
        }
        Vector visits = a.transpose().partialPivLu().solve(pi_t);
        for (int r = 0; r < t; ++r)
            for (int s = 0; s < S; ++s)
                if (klass[s] >= 0) mass(klass[s]) += visits(r) * transition(transient[r], s);
    }

    Vector out = Vector::Zero(S);
    for (int c = 0; c < static_cast<int>(classes.size()); ++c) {
        if (mass(c) <= 0.0) continue;
        Vector mu = class_stationary(transition, classes[c]);
        for (int k = 0; k < static_cast<int>(classes[c].size()); ++k)
            out(classes[c][k]) += mass(c) * mu(k);
    }
    double total = out.sum();
    if (!(total > 0.0)) throw NumericError("long-run distribution has no mass");
    return out / total;
}

Vector stationary_distribution(const FactoredMdp& mdp, const ControlMap& phi) {
    return long_run_distribution(transition_matrix(mdp, phi), mdp.initial());
}

} // namespace dmdp

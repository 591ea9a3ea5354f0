#pragma once

#include <span>
#include <vector>

#include "dmdp/mdp.hpp"

namespace dmdp {

/// Incremental evaluator of J(phi) = pi (I - beta P(phi))^{-1} (r_phi - cost).
///
/// Keeps the inverse M = (I - beta P(phi))^{-1} and scores the change of phi on a set of
/// m states with the Woodbury identity in O(m^2 S); applying a change costs O(m S^2).
class PolicyEvaluator {
public:
    PolicyEvaluator(const FactoredMdp& mdp, ControlMap phi, Vector cost = Vector());

    const ControlMap& policy() const { return phi_; }
    double objective() const { return objective_; }
    /// Occupancy row pi M; sums to 1/(1-beta).
    const Vector& occupancy() const { return w_; }
    /// Value vector M (r_phi - cost).
    const Vector& values() const { return v_; }
    const Vector& cost() const { return cost_; }

    /// Objective if every state in `states` switched to `action`.
    double score(std::span<const int> states, int action) const;
    void apply(std::span<const int> states, int action);
    void set_cost(Vector cost);
    /// Recomputes the inverse from scratch.
    void refactor();

    /// Updates between automatic refactorizations.
    void set_refactor_interval(int n) { refactor_interval_ = n; }

private:
    struct Delta {
        std::vector<int> moved;
        Matrix d;        // m x S kernel row differences
        Matrix mu;       // S x m columns of M
        Vector dr;       // m reward differences
        Eigen::PartialPivLU<Matrix> k;  // I - beta D M U
        Vector h;        // D v + G dr
    };
    bool prepare(std::span<const int> states, int action, Delta& out) const;

    const FactoredMdp& mdp_;
    ControlMap phi_;
    Vector cost_;
    Vector net_;   // r_phi - cost
    Matrix m_;
    Vector w_;
    Vector v_;
    double objective_ = 0.0;
    int updates_ = 0;
    int refactor_interval_ = 256;
};

} // namespace dmdp

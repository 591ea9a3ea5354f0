#include "dmdp/policy_evaluator.hpp"

#include "dmdp/error.hpp"

#include <algorithm>

namespace dmdp {

PolicyEvaluator::PolicyEvaluator(const FactoredMdp& mdp, ControlMap phi, Vector cost)
    : mdp_(mdp), phi_(std::move(phi)), cost_(std::move(cost)) {
    if (cost_.size() == 0) cost_ = Vector::Zero(mdp.num_states());
    if (cost_.size() != mdp.num_states()) throw ValidationError("cost vector has wrong length");
    refactor();
}

void PolicyEvaluator::refactor() {
    const int S = mdp_.num_states();
    Matrix a = Matrix::Identity(S, S) - mdp_.discount() * transition_matrix(mdp_, phi_);
    m_ = a.partialPivLu().inverse();
    if (!m_.allFinite()) throw NumericError("policy evaluation inverse failed");
    net_ = policy_reward(mdp_, phi_) - cost_;
    w_ = mdp_.initial().transpose() * m_;
    v_ = m_ * net_;
    objective_ = mdp_.initial().dot(v_);
    updates_ = 0;
}

void PolicyEvaluator::set_cost(Vector cost) {
    if (cost.size() != mdp_.num_states()) throw ValidationError("cost vector has wrong length");
    cost_ = std::move(cost);
    net_ = policy_reward(mdp_, phi_) - cost_;
    v_ = m_ * net_;
    objective_ = mdp_.initial().dot(v_);
}

bool PolicyEvaluator::prepare(std::span<const int> states, int action, Delta& out) const {
    if (action < 0 || action >= mdp_.num_actions()) throw ValidationError("action out of range");
    std::vector<int> moved;
    for (int s : states)
        if (phi_[s] != action) moved.push_back(s);
    std::sort(moved.begin(), moved.end());
    moved.erase(std::unique(moved.begin(), moved.end()), moved.end());
    if (moved.empty()) return false;
    out.moved = moved;
    const int m = static_cast<int>(moved.size());
    const int S = mdp_.num_states();
    out.d.resize(m, S);
    out.mu.resize(S, m);
    out.dr.resize(m);
    for (int k = 0; k < m; ++k) {
        const int s = moved[k];
        out.d.row(k) = mdp_.kernel(action).row(s) - mdp_.kernel(phi_[s]).row(s);
        out.mu.col(k) = m_.col(s);
        out.dr(k) = (mdp_.mean_reward()(s, action) - cost_(s)) - net_(s);
    }
    Matrix g = out.d * out.mu;
    out.k.compute(Matrix::Identity(m, m) - mdp_.discount() * g);
    out.h = out.d * v_ + g * out.dr;
    return true;
}

double PolicyEvaluator::score(std::span<const int> states, int action) const {
    Delta d;
    if (!prepare(states, action, d)) return objective_;
    // w_F is pi M U, i.e. the occupancy of the moved states.
    Vector wf(d.mu.cols());
    for (Eigen::Index k = 0; k < d.mu.cols(); ++k) wf(k) = w_(d.moved[k]);
    return objective_ + wf.dot(d.dr) + mdp_.discount() * wf.dot(d.k.solve(d.h));
}

void PolicyEvaluator::apply(std::span<const int> states, int action) {
    Delta d;
    if (!prepare(states, action, d)) return;
    const double beta = mdp_.discount();
    Matrix dm = d.d * m_;                 // m x S
    Matrix kdm = d.k.solve(dm);           // K^{-1} D M
    Vector kh = d.k.solve(d.h);
    Vector wf(d.mu.cols());
    for (Eigen::Index k = 0; k < d.mu.cols(); ++k) wf(k) = w_(d.moved[k]);
    w_ += beta * kdm.transpose() * wf;
    v_ += d.mu * d.dr + beta * d.mu * kh;
    m_.noalias() += beta * d.mu * kdm;
    for (int s : states) {
        phi_[s] = action;
        net_(s) = mdp_.mean_reward()(s, action) - cost_(s);
    }
    objective_ = mdp_.initial().dot(v_);
    if (++updates_ >= refactor_interval_) refactor();
}

} // namespace dmdp

#include "dmdp/mdp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "dmdp/error.hpp"

namespace dmdp {

StateIndexer::StateIndexer(std::vector<int> radices) : radices_(std::move(radices)) {
    strides_.assign(radices_.size(), 1);
    std::int64_t size = 1;
    for (int n = static_cast<int>(radices_.size()) - 1; n >= 0; --n) {
        if (radices_[n] <= 0) throw ValidationError("local state space must be non-empty");
        strides_[n] = static_cast<int>(size);
        size *= radices_[n];
        if (size > std::numeric_limits<int>::max())
            throw BudgetError("global state space exceeds int range");
    }
    size_ = static_cast<int>(size);
}

int StateIndexer::index(std::span<const int> local) const {
    if (local.size() != radices_.size())
        throw ValidationError("state tuple length does not match number of nodes");
    int idx = 0;
    for (std::size_t n = 0; n < local.size(); ++n) {
        if (local[n] < 0 || local[n] >= radices_[n])
            throw ValidationError("local state index out of range");
        idx += local[n] * strides_[n];
    }
    return idx;
}

std::vector<int> StateIndexer::decode(int index) const {
    if (index < 0 || index >= size_) throw ValidationError("global state index out of range");
    std::vector<int> local(radices_.size());
    for (std::size_t n = 0; n < radices_.size(); ++n) local[n] = digit(index, static_cast<int>(n));
    return local;
}

bool ControlMap::is_constant() const {
    return std::adjacent_find(actions_.begin(), actions_.end(), std::not_equal_to<>()) ==
           actions_.end();
}

double CandidateSet::count() const {
    double total = 1.0;
    for (ActionMask m : allowed) {
        total *= std::popcount(m);
        if (!std::isfinite(total)) return std::numeric_limits<double>::max();
    }
    return total;
}

bool CandidateSet::contains(const ControlMap& phi) const {
    if (phi.size() != num_states()) return false;
    for (int s = 0; s < num_states(); ++s)
        if (phi[s] < 0 || phi[s] >= 64 || !(allowed[s] >> phi[s] & 1U)) return false;
    return true;
}

ControlMap CandidateSet::lowest() const {
    std::vector<int> a(allowed.size());
    for (std::size_t s = 0; s < allowed.size(); ++s) a[s] = std::countr_zero(allowed[s]);
    return ControlMap(std::move(a));
}

ControlMap CandidateSet::highest() const {
    std::vector<int> a(allowed.size());
    for (std::size_t s = 0; s < allowed.size(); ++s) a[s] = 63 - std::countl_zero(allowed[s]);
    return ControlMap(std::move(a));
}

void validate_stochastic(const std::vector<Matrix>& kernel, double tol) {
    for (std::size_t a = 0; a < kernel.size(); ++a) {
        const Matrix& q = kernel[a];
        if ((q.array() < 0.0).any()) {
            std::ostringstream msg;
            msg << "kernel for action " << a << " has a negative entry";
            throw ValidationError(msg.str());
        }
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            double sum = q.row(i).sum();
            if (!(std::abs(sum - 1.0) <= tol)) {
                std::ostringstream msg;
                msg << "kernel row " << i << " for action " << a << " sums to " << sum;
                throw ValidationError(msg.str());
            }
        }
    }
}

FactoredMdp::FactoredMdp(std::vector<LocalStateSpace> locals, std::vector<std::string> actions,
                         std::vector<Matrix> kernel, std::vector<Matrix> reward, double discount,
                         Vector initial)
    : locals_(std::move(locals)), actions_(std::move(actions)), kernel_(std::move(kernel)),
      reward_(std::move(reward)), discount_(discount), initial_(std::move(initial)) {
    if (locals_.empty()) throw ValidationError("model needs at least one node");
    std::vector<int> radices;
    for (const auto& l : locals_) {
        if (l.symbols.empty()) throw ValidationError("node '" + l.name + "' has no local states");
        std::set<std::string> seen(l.symbols.begin(), l.symbols.end());
        if (seen.size() != l.symbols.size())
            throw ValidationError("node '" + l.name + "' has duplicate local state labels");
        radices.push_back(l.size());
    }
    indexer_ = StateIndexer(std::move(radices));
    if (actions_.empty()) throw ValidationError("model needs at least one action");
    if (actions_.size() > 64) throw ValidationError("at most 64 actions are supported");
    if (kernel_.size() != actions_.size() || reward_.size() != actions_.size())
        throw ValidationError("kernel and reward must have one matrix per action");
    const int S = indexer_.size();
    for (std::size_t a = 0; a < actions_.size(); ++a) {
        if (kernel_[a].rows() != S || kernel_[a].cols() != S || reward_[a].rows() != S ||
            reward_[a].cols() != S)
            throw ValidationError("kernel/reward matrices must be S x S");
        if (!reward_[a].allFinite()) throw ValidationError("rewards must be finite");
    }
    validate_stochastic(kernel_);
    if (!(discount_ >= 0.0 && discount_ < 1.0)) throw ValidationError("discount must lie in [0,1)");
    if (initial_.size() != S) throw ValidationError("initial distribution has wrong length");
    if ((initial_.array() < 0.0).any() || std::abs(initial_.sum() - 1.0) > 1e-12)
        throw ValidationError("initial distribution must be a probability vector");

    mean_reward_.resize(S, num_actions());
    for (int a = 0; a < num_actions(); ++a)
        mean_reward_.col(a) = kernel_[a].cwiseProduct(reward_[a]).rowwise().sum();
}

void FactoredMdp::set_channel(const std::string& name, Matrix per_state_action) {
    if (per_state_action.rows() != num_states() || per_state_action.cols() != num_actions())
        throw ValidationError("channel '" + name + "' must be S x A");
    channels_[name] = std::move(per_state_action);
}

const Matrix* FactoredMdp::channel(const std::string& name) const {
    auto it = channels_.find(name);
    return it == channels_.end() ? nullptr : &it->second;
}

double FactoredMdp::factorization_residual(const FactoredMdp& mdp,
                                           const std::vector<std::vector<Matrix>>& factors) {
    if (static_cast<int>(factors.size()) != mdp.num_actions())
        throw ValidationError("need one factor list per action");
    const auto& ix = mdp.indexer();
    double worst = 0.0;
    for (int a = 0; a < mdp.num_actions(); ++a) {
        if (static_cast<int>(factors[a].size()) != mdp.num_nodes())
            throw ValidationError("need one factor per node");
        for (int n = 0; n < mdp.num_nodes(); ++n)
            if (factors[a][n].rows() != ix.radix(n) || factors[a][n].cols() != ix.radix(n))
                throw ValidationError("factor has wrong shape");
        for (int i = 0; i < mdp.num_states(); ++i)
            for (int j = 0; j < mdp.num_states(); ++j) {
                double p = 1.0;
                for (int n = 0; n < mdp.num_nodes(); ++n)
                    p *= factors[a][n](ix.digit(i, n), ix.digit(j, n));
                worst = std::max(worst, std::abs(p - mdp.kernel(a)(i, j)));
            }
    }
    return worst;
}

void FactoredMdp::set_factors(std::vector<std::vector<Matrix>> factors) {
    double r = factorization_residual(*this, factors);
    if (r > 1e-12) {
        std::ostringstream msg;
        msg << "kernel does not factor across nodes (residual " << r << ")";
        throw ValidationError(msg.str());
    }
    factors_ = std::move(factors);
}

Matrix q_values(const FactoredMdp& mdp, const Vector& values) {
    Matrix q = mdp.mean_reward();
    for (int a = 0; a < mdp.num_actions(); ++a)
        q.col(a).noalias() += mdp.discount() * (mdp.kernel(a) * values);
    return q;
}

ValueFunction value_iteration(const FactoredMdp& mdp, double tol,
                              const std::function<void(const Vector&)>& on_iterate) {
    if (!(tol > 0.0)) throw ValidationError("value_iteration tolerance must be positive");
    const double beta = mdp.discount();
    ValueFunction v{Vector::Zero(mdp.num_states()), 0};
    if (beta == 0.0) {
        v.values = mdp.mean_reward().rowwise().maxCoeff();
        v.iterations = 1;
        if (on_iterate) on_iterate(v.values);
        return v;
    }
    const double threshold = tol * (1.0 - beta) / beta;
    constexpr int kMaxIterations = 10'000'000;
    while (v.iterations < kMaxIterations) {
        Vector next = q_values(mdp, v.values).rowwise().maxCoeff();
        double change = (next - v.values).cwiseAbs().maxCoeff();
        v.values = std::move(next);
        ++v.iterations;
        if (on_iterate) on_iterate(v.values);
        if (change <= threshold) return v;
    }
    throw NumericError("value iteration did not converge");
}

ControlMap extract_policy(const FactoredMdp& mdp, const ValueFunction& value, TieBreak tie_break) {
    if (!value.values.allFinite()) throw ValidationError("value function must be finite");
    Matrix q = q_values(mdp, value.values);
    std::vector<int> act(mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) {
        int best = 0;
        for (int a = 1; a < mdp.num_actions(); ++a) {
            bool better = tie_break == TieBreak::lowest ? q(s, a) > q(s, best) : q(s, a) >= q(s, best);
            if (better) best = a;
        }
        act[s] = best;
    }
    return ControlMap(std::move(act));
}

static void check_policy(const FactoredMdp& mdp, const ControlMap& phi) {
    if (phi.size() != mdp.num_states()) throw ValidationError("control map has wrong length");
    for (int s = 0; s < phi.size(); ++s)
        if (phi[s] < 0 || phi[s] >= mdp.num_actions())
            throw ValidationError("control map action out of range");
}

Matrix transition_matrix(const FactoredMdp& mdp, const ControlMap& phi) {
    check_policy(mdp, phi);
    Matrix p(mdp.num_states(), mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) p.row(s) = mdp.kernel(phi[s]).row(s);
    return p;
}

Vector policy_reward(const FactoredMdp& mdp, const ControlMap& phi) {
    check_policy(mdp, phi);
    Vector r(mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) r(s) = mdp.mean_reward()(s, phi[s]);
    return r;
}

ValueFunction policy_value(const FactoredMdp& mdp, const ControlMap& phi) {
    const int S = mdp.num_states();
    Matrix a = Matrix::Identity(S, S) - mdp.discount() * transition_matrix(mdp, phi);
    Vector r = policy_reward(mdp, phi);
    Eigen::PartialPivLU<Matrix> lu(a);
    ValueFunction v{lu.solve(r), 1};
    double residual = (a * v.values - r).cwiseAbs().maxCoeff();
    if (!v.values.allFinite() || residual > 1e-9)
        throw NumericError("policy evaluation solve failed");
    return v;
}

PolicyIterationResult policy_iteration(const FactoredMdp& mdp, std::optional<ControlMap> initial) {
    PolicyIterationResult out;
    out.policy = initial ? *initial : ControlMap::constant(mdp.num_states(), 0);
    check_policy(mdp, out.policy);
    const int S = mdp.num_states();
    constexpr double kImprove = 1e-12;
    while (true) {
        out.value = policy_value(mdp, out.policy);
        out.trace.push_back(out.value.values);
        ++out.iterations;
        Matrix q = q_values(mdp, out.value.values);
        ControlMap next = out.policy;
        bool changed = false;
        for (int s = 0; s < S; ++s) {
            int cur = out.policy[s];
            int best = cur;
            for (int a = 0; a < mdp.num_actions(); ++a)
                if (q(s, a) > q(s, best) + kImprove * std::max(1.0, std::abs(q(s, cur)))) best = a;
            if (best != cur) {
                next[s] = best;
                changed = true;
            }
        }
        if (!changed) break;
        out.policy = std::move(next);
    }
    out.value.iterations = out.iterations;
    return out;
}

CandidateSet candidate_control_set(const FactoredMdp& mdp, const ValueFunction& optimal,
                                   double tie_tol) {
    if (!(tie_tol >= 0.0)) throw ValidationError("tie tolerance must be nonnegative");
    Matrix q = q_values(mdp, optimal.values);
    CandidateSet c;
    c.num_actions = mdp.num_actions();
    c.allowed.resize(mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) {
        double best = q.row(s).maxCoeff();
        ActionMask m = 0;
        for (int a = 0; a < mdp.num_actions(); ++a)
            if (q(s, a) >= best - tie_tol) m |= ActionMask{1} << a;
        c.allowed[s] = m;
    }
    return c;
}

OccupancyWeights discounted_occupancy(const FactoredMdp& mdp, const ControlMap& phi,
                                      bool normalized) {
    const int S = mdp.num_states();
    const double beta = mdp.discount();
    Matrix a = Matrix::Identity(S, S) - beta * transition_matrix(mdp, phi);
    Eigen::PartialPivLU<Matrix> lu(a.transpose());
    Vector w = lu.solve(mdp.initial());
    if (!w.allFinite() || std::abs(w.sum() - 1.0 / (1.0 - beta)) > 1e-9 * std::max(1.0, w.sum()))
        throw NumericError("occupancy solve failed");
    w = w.cwiseMax(0.0);
    if (normalized) w *= (1.0 - beta);
    return {std::move(w), normalized};
}

double expected_discounted_reward(const FactoredMdp& mdp, const ControlMap& phi,
                                  const Vector& per_state_cost) {
    if (per_state_cost.size() != 0 && per_state_cost.size() != mdp.num_states())
        throw ValidationError("cost vector length does not match state count");
    Vector net = policy_reward(mdp, phi);
    if (per_state_cost.size() != 0) net -= per_state_cost;
    return discounted_occupancy(mdp, phi).weights.dot(net);
}

} // namespace dmdp

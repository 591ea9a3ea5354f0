#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Bit set over actions; bit a is set when action a is allowed. Limits models to 64 actions.
using ActionMask = std::uint64_t;

/// Finite set of local-state labels observed at one node.
struct LocalStateSpace {
    std::string name;
    std::vector<std::string> symbols;

    int size() const { return static_cast<int>(symbols.size()); }
};

/// Lexicographic bijection between local-state tuples and global indices.
/// Node 0 is the most significant digit.
class StateIndexer {
public:
    StateIndexer() = default;
    explicit StateIndexer(std::vector<int> radices);

    int size() const { return size_; }
    int nodes() const { return static_cast<int>(radices_.size()); }
    int radix(int node) const { return radices_[node]; }
    const std::vector<int>& radices() const { return radices_; }

    int index(std::span<const int> local) const;
    std::vector<int> decode(int index) const;
    int digit(int index, int node) const { return (index / strides_[node]) % radices_[node]; }
    int with_digit(int index, int node, int value) const {
        return index + (value - digit(index, node)) * strides_[node];
    }

private:
    std::vector<int> radices_;
    std::vector<int> strides_;
    int size_ = 1;
};

/// Total map from global state index to action index.
class ControlMap {
public:
    ControlMap() = default;
    explicit ControlMap(std::vector<int> actions) : actions_(std::move(actions)) {}
    static ControlMap constant(int num_states, int action) {
        return ControlMap(std::vector<int>(num_states, action));
    }

    int operator[](int state) const { return actions_[state]; }
    int& operator[](int state) { return actions_[state]; }
    int size() const { return static_cast<int>(actions_.size()); }
    const std::vector<int>& actions() const { return actions_; }
    bool is_constant() const;

    friend bool operator==(const ControlMap&, const ControlMap&) = default;

private:
    std::vector<int> actions_;
};

struct ValueFunction {
    Vector values;
    int iterations = 0;
};

/// Per-state sets of Bellman-optimal actions; every selection is an optimal control map.
struct CandidateSet {
    std::vector<ActionMask> allowed;
    int num_actions = 0;

    int num_states() const { return static_cast<int>(allowed.size()); }
    /// Number of distinct selections, saturating at the largest finite double.
    double count() const;
    bool contains(const ControlMap& phi) const;
    /// Selection picking the lowest (or highest) allowed action in every state.
    ControlMap lowest() const;
    ControlMap highest() const;
};

struct OccupancyWeights {
    Vector weights;
    bool normalized = false;
};

/// Finite MDP over a product of local state spaces.
///
/// Kernels and rewards are stored densely, one S x S matrix per action. Auxiliary
/// per-(state, action) channels (e.g. expected packet drops) are carried for reporting.
class FactoredMdp {
public:
    FactoredMdp(std::vector<LocalStateSpace> locals, std::vector<std::string> actions,
                std::vector<Matrix> kernel, std::vector<Matrix> reward, double discount,
                Vector initial);

    const std::vector<LocalStateSpace>& locals() const { return locals_; }
    const std::vector<std::string>& actions() const { return actions_; }
    const StateIndexer& indexer() const { return indexer_; }
    int num_states() const { return indexer_.size(); }
    int num_actions() const { return static_cast<int>(actions_.size()); }
    int num_nodes() const { return indexer_.nodes(); }

    const Matrix& kernel(int action) const { return kernel_[action]; }
    const Matrix& reward(int action) const { return reward_[action]; }
    /// S x A matrix of one-step expected rewards sum_j Q_a(i,j) r_a(i,j).
    const Matrix& mean_reward() const { return mean_reward_; }
    double discount() const { return discount_; }
    const Vector& initial() const { return initial_; }

    void set_channel(const std::string& name, Matrix per_state_action);
    const Matrix* channel(const std::string& name) const;
    const std::map<std::string, Matrix>& channels() const { return channels_; }

    /// Declares the kernel as a product of per-node kernels, factors[a][n] being
    /// |S_n| x |S_n|. Throws ValidationError unless the product matches within 1e-12.
    void set_factors(std::vector<std::vector<Matrix>> factors);
    bool independence_flag() const { return !factors_.empty(); }
    const std::vector<std::vector<Matrix>>& factors() const { return factors_; }

    /// Largest absolute difference between the kernel and the product of its factors.
    static double factorization_residual(const FactoredMdp& mdp,
                                         const std::vector<std::vector<Matrix>>& factors);

private:
    std::vector<LocalStateSpace> locals_;
    std::vector<std::string> actions_;
    StateIndexer indexer_;
    std::vector<Matrix> kernel_;
    std::vector<Matrix> reward_;
    Matrix mean_reward_;
    double discount_;
    Vector initial_;
    std::map<std::string, Matrix> channels_;
    std::vector<std::vector<Matrix>> factors_;
};

/// S x A matrix of Q(i,a) = sum_j Q_a(i,j) [r_a(i,j) + beta V(j)].
Matrix q_values(const FactoredMdp& mdp, const Vector& values);

/// Value iteration stopped when successive sup-norm change is at most tol(1-beta)/beta,
/// which bounds the distance to the fixed point by tol.
ValueFunction value_iteration(const FactoredMdp& mdp, double tol,
                              const std::function<void(const Vector&)>& on_iterate = {});

enum class TieBreak { lowest, highest };

ControlMap extract_policy(const FactoredMdp& mdp, const ValueFunction& value,
                          TieBreak tie_break = TieBreak::lowest);

/// P(phi): row i is the kernel row of state i under action phi(i).
Matrix transition_matrix(const FactoredMdp& mdp, const ControlMap& phi);
/// r_phi: expected one-step reward of each state under phi.
Vector policy_reward(const FactoredMdp& mdp, const ControlMap& phi);

/// Direct dense solve of V = r_phi + beta P(phi) V.
ValueFunction policy_value(const FactoredMdp& mdp, const ControlMap& phi);

struct PolicyIterationResult {
    ControlMap policy;
    ValueFunction value;
    int iterations = 0;
    std::vector<Vector> trace;  ///< value of each evaluated policy, in order
};

PolicyIterationResult policy_iteration(const FactoredMdp& mdp,
                                       std::optional<ControlMap> initial = std::nullopt);

CandidateSet candidate_control_set(const FactoredMdp& mdp, const ValueFunction& optimal,
                                   double tie_tol = 1e-9);

/// Row vector w solving w (I - beta P(phi)) = pi. Sums to 1/(1-beta) unless normalized.
OccupancyWeights discounted_occupancy(const FactoredMdp& mdp, const ControlMap& phi,
                                      bool normalized = false);

/// sum_i w(i) (r_phi(i) - cost(i)). An empty cost vector means zero cost.
double expected_discounted_reward(const FactoredMdp& mdp, const ControlMap& phi,
                                  const Vector& per_state_cost = Vector());

/// Throws ValidationError unless every row of every kernel is a distribution.
void validate_stochastic(const std::vector<Matrix>& kernel, double tol = 1e-12);

} // namespace dmdp

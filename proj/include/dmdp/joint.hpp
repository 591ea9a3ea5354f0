#pragma once

#include <string>
#include <vector>

#include "dmdp/graph_coder.hpp"
#include "dmdp/mdp.hpp"

namespace dmdp {

/// Reward r_a(i,j) - lambda |e(i)|: bits are traded against reward at rate lambda.
struct AugmentedModel {
    const FactoredMdp* mdp = nullptr;
    double lambda = 0.0;
    LengthModel length = LengthModel::huffman;

    AugmentedModel(const FactoredMdp& m, double lam, LengthModel len = LengthModel::huffman);
};

struct JointSolution {
    ControlMap phi;
    EncoderVec enc;
    double reward = 0.0;               ///< augmented expected discounted reward
    double throughput = 0.0;           ///< per slot, occupancy-normalized
    double drops = 0.0;                ///< per slot, occupancy-normalized
    double bits = 0.0;                 ///< control bits per slot, occupancy-normalized
    double long_run_throughput = 0.0;  ///< per slot under the long-run distribution
    double long_run_bits = 0.0;
    std::vector<double> trace;
    bool converged = true;
    int iterations = 0;
};

/// lambda |e(s)| for every state.
Vector control_cost(const AugmentedModel& model, const EncoderVec& enc);

/// Expected discounted augmented reward; throws ValidationError unless (phi, enc) is decodable.
double augmented_expected_reward(const AugmentedModel& model, const ControlMap& phi,
                                 const EncoderVec& enc);

/// Feasible encoder minimizing expected bits for phi: MIS partitions over full local
/// supports, lengths from the normalized occupancy of phi.
EncoderVec quantizer_update(const AugmentedModel& model, const ControlMap& phi);

/// Identity encoders with lengths from the normalized occupancy of phi.
EncoderVec identity_encoders(const AugmentedModel& model, const ControlMap& phi);

/// States grouped by message tuple, in lexicographic message order.
std::vector<std::vector<int>> message_fibers(const StateIndexer& ix, const EncoderVec& enc);

/// True iff phi is constant on every fiber of enc.
bool fiber_constant(const StateIndexer& ix, const ControlMap& phi, const EncoderVec& enc);

enum class UpdateOrder { round_robin, greedy };
const char* to_string(UpdateOrder o);

struct ControlUpdate {
    ControlMap phi;
    std::vector<double> trace;  ///< objective after every accepted change, starting value first
    int changes = 0;
};

/// Re-optimizes phi one message fiber at a time until a full pass changes nothing.
/// Round-robin visits fibers in message order; greedy applies the single best change
/// (ties to the lowest fiber, then lowest action). `start` must be fiber-constant.
ControlUpdate coordinate_control_update(const AugmentedModel& model, const EncoderVec& enc,
                                        const ControlMap& start, UpdateOrder order);

/// Best fiber-constant map: exact enumeration of all |A|^fibers maps when within budget,
/// otherwise round-robin coordinate updates from the constant map to action 0.
ControlMap control_update(const AugmentedModel& model, const EncoderVec& enc, double budget = 1e6);

/// Alternates coordinate control updates and quantizer updates, starting from the blind
/// map phi = 0 with identity encoders, until (phi, e) repeats or max_iters cycles.
JointSolution alternate_optimize(const AugmentedModel& model, UpdateOrder order, int max_iters = 100);

struct Deviation {
    int fiber = -1;     ///< -1 for the quantizer deviation
    int action = -1;
    double gain = 0.0;
};

struct NashReport {
    bool ok = true;
    std::vector<Deviation> violations;
};

/// Checks every single-fiber action change and the quantizer best response.
NashReport nash_check(const AugmentedModel& model, const JointSolution& sol, double tol = 1e-9);

/// Fills the reporting fields of a solution for (phi, enc).
JointSolution evaluate_solution(const AugmentedModel& model, ControlMap phi, EncoderVec enc);

/// Global maximizer over all |A|^S control maps, each paired with its rate-minimizing
/// encoder. Ties prefer fewer bits.
JointSolution exhaustive_joint_search(const AugmentedModel& model, double budget = 1e7);

/// One enumeration shared by all lambdas.
std::vector<JointSolution> exhaustive_sweep(const FactoredMdp& mdp, const std::vector<double>& lambdas,
                                            LengthModel length, double budget = 1e7);

enum class Method { exhaustive, round_robin, greedy };
const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct TradeoffPoint {
    double lambda = 0.0;
    std::string method;
    JointSolution solution;
    bool nash_ok = false;
    bool negative = false;  ///< augmented reward below zero
    std::string error;      ///< non-empty when the point failed (e.g. over budget)
};

struct TradeoffCurve {
    std::vector<TradeoffPoint> points;
    TradeoffPoint blind;  ///< best constant map, zero bits
};

struct SweepOptions {
    LengthModel length = LengthModel::huffman;
    double budget = 1e7;
    int max_iters = 100;
};

TradeoffCurve tradeoff_sweep(const FactoredMdp& mdp, const std::vector<double>& lambdas, Method method,
                             const SweepOptions& options = {});

/// Versioned CSV: lambda,method,reward,throughput,drops,bits,converged,nash_ok,long_run_throughput.
std::string tradeoff_csv(const std::vector<TradeoffCurve>& curves);

} // namespace dmdp

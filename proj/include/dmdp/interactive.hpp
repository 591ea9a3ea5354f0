#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dmdp/coding.hpp"
#include "dmdp/concave_envelope.hpp"
#include "dmdp/graph_coder.hpp"
#include "dmdp/mdp.hpp"

namespace dmdp {

/// Rational grid over one node's probability simplex: all distributions with denominator k,
/// plus any extra points supplied (deduplicated).
struct SimplexGrid {
    int dimension = 0;
    int resolution = 0;
    std::vector<Vector> points;

    static SimplexGrid lattice(int dimension, int resolution);
    /// Lattice augmented with `target` and its renormalized restrictions to every
    /// nonempty subset of its support.
    static SimplexGrid with_restrictions(int dimension, int resolution, const Vector& target);
    int size() const { return static_cast<int>(points.size()); }
    /// Index of the point equal to p within 1e-12, or -1.
    int find(const Vector& p) const;
};

/// Values of a rate-reduction function on the product of per-node grids.
struct RateReductionTable {
    int round = 0;
    std::vector<SimplexGrid> grids;
    std::vector<Extended> values;  ///< node 0 most significant

    int size() const { return static_cast<int>(values.size()); }
    std::vector<int> decode(int index) const;
    int encode(const std::vector<int>& coords) const;
};

/// H(p) when some candidate action is allowed on every state of supp(p), else bottom.
/// `marginals` are per-node distributions; `candidates` are indexed by the product indexer.
Extended rho0(const StateIndexer& ix, const CandidateSet& candidates,
              const std::vector<Vector>& marginals);

RateReductionTable initial_table(const StateIndexer& ix, const CandidateSet& candidates,
                                 std::vector<SimplexGrid> grids);

/// Replaces every slice along the speaker's coordinate by its upper concave envelope.
RateReductionTable concavify_step(const RateReductionTable& table, int speaker);

/// Speaker of 1-based round r: node (r-1) mod N.
inline int speaker_of_round(int round, int nodes) { return (round - 1) % nodes; }

struct BoundResult {
    double rate = 0.0;            ///< H(p) - rho_M(p); +infinity when rho_M(p) is bottom
    std::vector<double> by_round; ///< rate after 0..M rounds
    int resolution = 0;
    bool approximate = true;      ///< gridded, hence an approximation of the true limit
};

struct BoundOptions {
    int resolution = 0;           ///< 0 picks 64 for binary supports, 16 for ternary, 4 otherwise
    int max_support = 4;
    int max_nodes = 3;
    double max_table = 2e6;
};

/// Interactive rate bound after M turns with round-robin speakers.
BoundResult interactive_rate_bound(const StateIndexer& ix, const CandidateSet& candidates,
                                   const std::vector<Vector>& marginals, int rounds,
                                   const BoundOptions& options = {});

enum class ProtocolMode { heterogeneous, homogeneous };
const char* to_string(ProtocolMode m);
ProtocolMode protocol_mode_from_string(const std::string& s);

/// Node of a transcript tree: either a decision leaf or a round of messages.
struct ProtocolNode {
    int round = 0;
    std::vector<int> subsets;          ///< per node, bitmask of still-possible local symbols
    int action = -1;                   ///< decided action at a leaf
    std::vector<int> speakers;         ///< nodes sending this round
    std::vector<Partition> quantizers; ///< per speaker, blocks of its current subset
    std::vector<std::unique_ptr<ProtocolNode>> children;  ///< one per message tuple

    bool leaf() const { return action >= 0; }
};

struct InteractiveProtocol {
    int rounds = 0;
    ProtocolMode mode = ProtocolMode::heterogeneous;
    std::unique_ptr<ProtocolNode> root;
};

struct ProtocolOptions {
    int max_alphabet = 4;
    ProtocolMode mode = ProtocolMode::heterogeneous;
    LengthModel length = LengthModel::huffman;
    double budget = 5e7;
};

struct ProtocolResult {
    InteractiveProtocol protocol;
    double rate = 0.0;  ///< expected transcript bits; +infinity when M rounds cannot decide
};

/// Exhaustive scalar-quantizer protocol search by dynamic programming over rectangles.
/// Heterogeneous: one speaker per round, node r mod N. Homogeneous: every node each round.
ProtocolResult optimal_scalar_protocol(const StateIndexer& ix, const CandidateSet& candidates,
                                       const std::vector<Vector>& marginals, int rounds,
                                       const ProtocolOptions& options = {});

/// Follows the transcript of `state` to its leaf; returns the decided action.
int protocol_action(const InteractiveProtocol& p, const StateIndexer& ix, int state);

/// Every support state reaches a leaf whose action is a candidate for that state.
bool protocol_decodable(const InteractiveProtocol& p, const StateIndexer& ix,
                        const CandidateSet& candidates, const SupportSets& support);

std::string dump_protocol(const InteractiveProtocol& p);

/// One-slot MDP whose candidate actions are the argmax positions of the node values:
/// node n holds a value uniform on {0..supports[n]-1}, action n earns that value.
FactoredMdp argmax_mdp(const std::vector<int>& supports);

} // namespace dmdp

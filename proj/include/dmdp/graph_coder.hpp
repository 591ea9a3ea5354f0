#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmdp/coding.hpp"
#include "dmdp/mdp.hpp"

namespace dmdp {

/// Per-node positive-support indicator over local symbols.
using SupportSets = std::vector<std::vector<bool>>;
/// A partition of a symbol set as a list of blocks, each sorted ascending.
using Partition = std::vector<std::vector<int>>;

/// Marginal distribution of each node under a weighting of global states.
std::vector<Vector> node_marginals(const StateIndexer& ix, const Vector& weights);
/// Symbols with strictly positive marginal mass.
SupportSets positive_supports(const std::vector<Vector>& marginals);
/// Every symbol of every node.
SupportSets full_supports(const StateIndexer& ix);

/// Simple undirected graph on the local symbols of one node.
class CharacteristicGraph {
public:
    CharacteristicGraph(int node, int vertices);

    int node() const { return node_; }
    int vertices() const { return static_cast<int>(adj_.size()); }
    bool adjacent(int x, int y) const { return adj_[x][y]; }
    void add_edge(int x, int y);
    int edge_count() const;

private:
    int node_;
    std::vector<std::vector<bool>> adj_;
};

/// Edge {x,y} iff both are in node's support and some context of the other nodes'
/// positive-support symbols makes phi differ between x and y.
CharacteristicGraph build_characteristic_graph(const StateIndexer& ix, const SupportSets& support,
                                               const ControlMap& phi, int node);

/// True iff non-adjacency is transitive over the graph's vertices.
bool verify_complement_transitivity(const CharacteristicGraph& g);

/// Maximal independent sets of a complement-transitive graph, ordered by smallest member.
/// Throws StructuralError when transitivity fails.
Partition mis_partition(const CharacteristicGraph& g);

struct Coloring {
    std::vector<int> color_of;
    int num_colors = 0;

    bool proper_for(const CharacteristicGraph& g) const;
    /// Color distribution induced by vertex weights.
    Vector distribution(const Vector& weights) const;
};

Coloring coloring_from_partition(const Partition& p, int vertices);
Partition partition_from_coloring(const Coloring& c);

/// Colorings produced by repeatedly removing a maximal independent set of the remaining
/// vertices, over all choices. Stops after `limit` colorings.
std::vector<Coloring> greedy_colorings(const CharacteristicGraph& g, std::size_t limit = 100000);

struct ColoringResult {
    Coloring coloring;
    double entropy = 0.0;
};

/// MIS-partition coloring when the graph is complement transitive; otherwise the
/// lowest-entropy greedy coloring found.
ColoringResult min_entropy_coloring(const CharacteristicGraph& g, const Vector& weights);

struct NodeEncoder {
    std::vector<int> color_of;  ///< local symbol -> color
    Vector color_dist;          ///< probability of each color
    PrefixCode code;            ///< Huffman code over colors

    int num_colors() const { return static_cast<int>(color_dist.size()); }
};

/// Per-node encoders plus the length model used for |e(s)|.
struct EncoderVec {
    std::vector<NodeEncoder> nodes;
    LengthModel model = LengthModel::huffman;

    /// Bits charged for color c at node n: codeword length, or -log2 p (capped at 64).
    double length(int node, int color) const;
    /// |e(s)| for every global state.
    Vector bits_per_state(const StateIndexer& ix) const;
    /// Lexicographic index of the message tuple of every global state.
    std::vector<int> message_of_states(const StateIndexer& ix) const;
    int num_messages() const;
    std::vector<int> message_tuple(const StateIndexer& ix, int state) const;
    /// Sum over nodes of the entropy of the color distribution.
    double entropy_rate() const;
    /// Sum over nodes of the expected Huffman codeword length.
    double huffman_rate() const;
    /// Rate in the configured length model.
    double rate() const { return model == LengthModel::huffman ? huffman_rate() : entropy_rate(); }

    friend bool operator==(const EncoderVec& a, const EncoderVec& b);
};

/// One color per symbol.
EncoderVec identity_encoder(const StateIndexer& ix, const std::vector<Vector>& marginals,
                            LengthModel model);
/// Encoder whose node-n colors are the blocks of partitions[n] (symbols not covered are
/// added to block 0).
EncoderVec encoder_from_partitions(const std::vector<Partition>& partitions,
                                   const std::vector<Vector>& marginals, LengthModel model);
/// Rate-minimizing feasible encoder for phi: MIS partitions of the characteristic graphs.
EncoderVec mis_encoder(const StateIndexer& ix, const ControlMap& phi,
                       const std::vector<Vector>& marginals, const SupportSets& support,
                       LengthModel model);

struct Decoding {
    bool ok = false;
    std::map<std::vector<int>, int> decision;  ///< message tuple -> action
};

/// Checks that phi is a function of the message tuple on all states (or on states whose
/// every local symbol lies in `support`, when given).
Decoding decodable(const StateIndexer& ix, const ControlMap& phi, const EncoderVec& enc,
                   const SupportSets* support = nullptr);

enum class Weighting { stationary, occupancy };
const char* to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

/// Weighting of global states under phi: long-run distribution or normalized occupancy.
Vector state_weighting(const FactoredMdp& mdp, const ControlMap& phi, Weighting w);

struct RateOptions {
    Weighting weighting = Weighting::stationary;
    /// Objective minimized over candidate-optimal maps.
    LengthModel objective = LengthModel::entropy;
    /// Cap on enumerated partition tuples (entropy) or full partition tuples (huffman).
    double budget = 1e8;
    /// Fall back to the lowest-index candidate map instead of throwing over budget.
    bool allow_approximate = false;
    /// Map whose weighting is used; defaults to the lowest-index candidate selection.
    std::optional<ControlMap> reference;
};

struct RateResult {
    double entropy_rate = 0.0;
    double huffman_rate = 0.0;
    ControlMap phi;
    EncoderVec encoder;
    std::vector<Partition> partitions;
    bool approximate = false;
    Weighting weighting = Weighting::stationary;
    double partitions_searched = 0.0;
};

/// Minimum over candidate-optimal maps of the sum of per-node chromatic entropies under a
/// weighting held fixed at the reference map. Searches per-node partitions exactly: all
/// partitions of every node but the largest, and a subset dynamic program on that one.
RateResult noninteractive_min_rate(const FactoredMdp& mdp, const CandidateSet& candidates,
                                   const RateOptions& options = {});

/// Same search against explicit marginals (product-form weighting).
RateResult noninteractive_min_rate(const StateIndexer& ix, const CandidateSet& candidates,
                                   const std::vector<Vector>& marginals,
                                   const RateOptions& options = {});

/// All set partitions of {0..k-1} in restricted-growth order.
std::vector<Partition> set_partitions(const std::vector<int>& symbols);

/// Text dump: one line per (node, symbol) with color and codeword.
std::string dump_encoder(const FactoredMdp& mdp, const EncoderVec& enc);

} // namespace dmdp

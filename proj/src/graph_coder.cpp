#include "dmdp/graph_coder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "dmdp/error.hpp"
#include "dmdp/markov_chain.hpp"

namespace dmdp {

std::vector<Vector> node_marginals(const StateIndexer& ix, const Vector& weights) {
    if (weights.size() != ix.size()) throw ValidationError("weighting has wrong length");
    double total = weights.sum();
    if (!(total > 0.0)) throw ValidationError("weighting has no mass");
    std::vector<Vector> m;
    for (int n = 0; n < ix.nodes(); ++n) m.push_back(Vector::Zero(ix.radix(n)));
    for (int s = 0; s < ix.size(); ++s)
        for (int n = 0; n < ix.nodes(); ++n) m[n](ix.digit(s, n)) += weights(s) / total;
    return m;
}

SupportSets positive_supports(const std::vector<Vector>& marginals) {
    SupportSets out;
    for (const auto& m : marginals) {
        std::vector<bool> s(m.size());
        for (Eigen::Index i = 0; i < m.size(); ++i) s[i] = m(i) > 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

SupportSets full_supports(const StateIndexer& ix) {
    SupportSets out;
    for (int n = 0; n < ix.nodes(); ++n) out.emplace_back(ix.radix(n), true);
    return out;
}

CharacteristicGraph::CharacteristicGraph(int node, int vertices)
    : node_(node), adj_(vertices, std::vector<bool>(vertices, false)) {}

void CharacteristicGraph::add_edge(int x, int y) {
    if (x == y) throw ValidationError("characteristic graphs have no self-loops");
    adj_[x][y] = adj_[y][x] = true;
}

int CharacteristicGraph::edge_count() const {
    int e = 0;
    for (int x = 0; x < vertices(); ++x)
        for (int y = x + 1; y < vertices(); ++y) e += adj_[x][y];
    return e;
}

namespace {

bool on_support(const StateIndexer& ix, const SupportSets& support, int s, int skip = -1) {
    for (int n = 0; n < ix.nodes(); ++n)
        if (n != skip && !support[n][ix.digit(s, n)]) return false;
    return true;
}

} // namespace

CharacteristicGraph build_characteristic_graph(const StateIndexer& ix, const SupportSets& support,
                                               const ControlMap& phi, int node) {
    if (node < 0 || node >= ix.nodes()) throw ValidationError("node index out of range");
    if (phi.size() != ix.size()) throw ValidationError("control map has wrong length");
    std::vector<int> contexts;
    for (int s = 0; s < ix.size(); ++s)
        if (ix.digit(s, node) == 0 && on_support(ix, support, s, node)) contexts.push_back(s);
    CharacteristicGraph g(node, ix.radix(node));
    for (int x = 0; x < ix.radix(node); ++x) {
        if (!support[node][x]) continue;
        for (int y = x + 1; y < ix.radix(node); ++y) {
            if (!support[node][y]) continue;
            for (int c : contexts)
                if (phi[ix.with_digit(c, node, x)] != phi[ix.with_digit(c, node, y)]) {
                    g.add_edge(x, y);
                    break;
                }
        }
    }
    return g;
}

static bool transitive_on(const CharacteristicGraph& g, const std::vector<bool>& active) {
    const int k = g.vertices();
    for (int x = 0; x < k; ++x)
        for (int y = 0; y < k; ++y) {
            if (x == y || !active[x] || !active[y] || g.adjacent(x, y)) continue;
            for (int z = 0; z < k; ++z)
                if (z != x && z != y && active[z] && !g.adjacent(y, z) && g.adjacent(x, z))
                    return false;
        }
    return true;
}

bool verify_complement_transitivity(const CharacteristicGraph& g) {
    return transitive_on(g, std::vector<bool>(g.vertices(), true));
}

static Partition mis_partition_on(const CharacteristicGraph& g, const std::vector<bool>& active) {
    if (!transitive_on(g, active))
        throw StructuralError("characteristic graph of node " + std::to_string(g.node()) +
                              " is not complement transitive");
    const int k = g.vertices();
    Partition blocks;
    std::vector<bool> used(k, false);
    for (int x = 0; x < k; ++x) {
        if (!active[x] || used[x]) continue;
        std::vector<int> block{x};
        used[x] = true;
        for (int y = x + 1; y < k; ++y)
            if (active[y] && !used[y] && !g.adjacent(x, y)) {
                block.push_back(y);
                used[y] = true;
            }
        blocks.push_back(std::move(block));
    }
    // Symbols outside the support carry no mass; they join the first block.
    for (int x = 0; x < k; ++x)
        if (!active[x]) {
            if (blocks.empty()) blocks.emplace_back();
            blocks.front().push_back(x);
        }
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    std::sort(blocks.begin(), blocks.end());
    return blocks;
}

Partition mis_partition(const CharacteristicGraph& g) {
    return mis_partition_on(g, std::vector<bool>(g.vertices(), true));
}

bool Coloring::proper_for(const CharacteristicGraph& g) const {
    for (int x = 0; x < g.vertices(); ++x)
        for (int y = x + 1; y < g.vertices(); ++y)
            if (g.adjacent(x, y) && color_of[x] == color_of[y]) return false;
    return true;
}

Vector Coloring::distribution(const Vector& weights) const {
    Vector d = Vector::Zero(num_colors);
    for (std::size_t v = 0; v < color_of.size(); ++v) d(color_of[v]) += weights(v);
    return d;
}

Coloring coloring_from_partition(const Partition& p, int vertices) {
    Coloring c{std::vector<int>(vertices, -1), static_cast<int>(p.size())};
    for (std::size_t b = 0; b < p.size(); ++b)
        for (int v : p[b]) c.color_of[v] = static_cast<int>(b);
    if (std::find(c.color_of.begin(), c.color_of.end(), -1) != c.color_of.end())
        throw ValidationError("partition does not cover every vertex");
    return c;
}

Partition partition_from_coloring(const Coloring& c) {
    Partition p(c.num_colors);
    for (std::size_t v = 0; v < c.color_of.size(); ++v) p[c.color_of[v]].push_back(static_cast<int>(v));
    std::erase_if(p, [](const auto& b) { return b.empty(); });
    std::sort(p.begin(), p.end());
    return p;
}

std::vector<Coloring> greedy_colorings(const CharacteristicGraph& g, std::size_t limit) {
    const int k = g.vertices();
    if (k > 64) throw BudgetError("greedy coloring enumeration supports at most 64 vertices");
    std::vector<std::uint64_t> nonadj(k, 0);
    for (int x = 0; x < k; ++x)
        for (int y = 0; y < k; ++y)
            if (x != y && !g.adjacent(x, y)) nonadj[x] |= std::uint64_t{1} << y;

    // Maximal independent sets of the subgraph induced by `within` (Bron-Kerbosch on the complement).
    auto maximal_sets = [&](std::uint64_t within) {
        std::vector<std::uint64_t> out;
        std::function<void(std::uint64_t, std::uint64_t, std::uint64_t)> bk =
            [&](std::uint64_t r, std::uint64_t p, std::uint64_t x) {
                if (!p && !x) {
                    out.push_back(r);
                    return;
                }
                while (p) {
                    int v = std::countr_zero(p);
                    std::uint64_t bit = std::uint64_t{1} << v;
                    bk(r | bit, p & nonadj[v], x & nonadj[v]);
                    p &= ~bit;
                    x |= bit;
                }
            };
        bk(0, within, 0);
        return out;
    };

    std::vector<Coloring> result;
    std::vector<std::uint64_t> classes;
    const std::uint64_t all = k == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
    std::function<void(std::uint64_t)> rec = [&](std::uint64_t remaining) {
        if (result.size() >= limit) return;
        if (!remaining) {
            Coloring c{std::vector<int>(k, 0), static_cast<int>(classes.size())};
            for (std::size_t i = 0; i < classes.size(); ++i)
                for (int v = 0; v < k; ++v)
                    if (classes[i] >> v & 1U) c.color_of[v] = static_cast<int>(i);
            result.push_back(std::move(c));
            return;
        }
        for (std::uint64_t set : maximal_sets(remaining)) {
            classes.push_back(set);
            rec(remaining & ~set);
            classes.pop_back();
            if (result.size() >= limit) return;
        }
    };
    rec(all);
    return result;
}

ColoringResult min_entropy_coloring(const CharacteristicGraph& g, const Vector& weights) {
    if (weights.size() != g.vertices()) throw ValidationError("vertex weights have wrong length");
    if (std::abs(weights.sum() - 1.0) > 1e-9) throw ValidationError("vertex weights must sum to 1");
    if (verify_complement_transitivity(g)) {
        Coloring c = coloring_from_partition(mis_partition(g), g.vertices());
        return {c, entropy_bits(c.distribution(weights))};
    }
    ColoringResult best{{}, std::numeric_limits<double>::infinity()};
    for (auto& c : greedy_colorings(g)) {
        double h = entropy_bits(c.distribution(weights));
        if (h < best.entropy) best = {std::move(c), h};
    }
    return best;
}

double EncoderVec::length(int node, int color) const {
    const NodeEncoder& e = nodes[node];
    if (model == LengthModel::huffman) return e.code.length(color);
    double p = e.color_dist(color);
    if (e.num_colors() == 1) return 0.0;
    return p > 0.0 ? std::min(64.0, -std::log2(p)) : 64.0;
}

Vector EncoderVec::bits_per_state(const StateIndexer& ix) const {
    Vector bits = Vector::Zero(ix.size());
    for (int s = 0; s < ix.size(); ++s)
        for (int n = 0; n < ix.nodes(); ++n) bits(s) += length(n, nodes[n].color_of[ix.digit(s, n)]);
    return bits;
}

std::vector<int> EncoderVec::message_of_states(const StateIndexer& ix) const {
    std::vector<int> m(ix.size(), 0);
    for (int s = 0; s < ix.size(); ++s) {
        int idx = 0;
        for (int n = 0; n < ix.nodes(); ++n)
            idx = idx * nodes[n].num_colors() + nodes[n].color_of[ix.digit(s, n)];
        m[s] = idx;
    }
    return m;
}

int EncoderVec::num_messages() const {
    int total = 1;
    for (const auto& e : nodes) total *= e.num_colors();
    return total;
}

std::vector<int> EncoderVec::message_tuple(const StateIndexer& ix, int state) const {
    std::vector<int> t(ix.nodes());
    for (int n = 0; n < ix.nodes(); ++n) t[n] = nodes[n].color_of[ix.digit(state, n)];
    return t;
}

double EncoderVec::entropy_rate() const {
    double h = 0.0;
    for (const auto& e : nodes) h += entropy_bits(e.color_dist);
    return h;
}

double EncoderVec::huffman_rate() const {
    double h = 0.0;
    for (const auto& e : nodes) h += e.code.expected_length(e.color_dist);
    return h;
}

bool operator==(const EncoderVec& a, const EncoderVec& b) {
    if (a.model != b.model || a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t n = 0; n < a.nodes.size(); ++n)
        if (a.nodes[n].color_of != b.nodes[n].color_of ||
            a.nodes[n].code.codewords != b.nodes[n].code.codewords)
            return false;
    return true;
}

static NodeEncoder make_node(std::vector<int> color_of, int colors, const Vector& marginal) {
    NodeEncoder e;
    e.color_dist = Vector::Zero(colors);
    for (std::size_t x = 0; x < color_of.size(); ++x) e.color_dist(color_of[x]) += marginal(x);
    e.color_of = std::move(color_of);
    e.code = huffman_code(e.color_dist);
    return e;
}

EncoderVec identity_encoder(const StateIndexer& ix, const std::vector<Vector>& marginals,
                            LengthModel model) {
    EncoderVec enc{{}, model};
    for (int n = 0; n < ix.nodes(); ++n) {
        std::vector<int> c(ix.radix(n));
        std::iota(c.begin(), c.end(), 0);
        enc.nodes.push_back(make_node(std::move(c), ix.radix(n), marginals[n]));
    }
    return enc;
}

EncoderVec encoder_from_partitions(const std::vector<Partition>& partitions,
                                   const std::vector<Vector>& marginals, LengthModel model) {
    if (partitions.size() != marginals.size()) throw ValidationError("need one partition per node");
    EncoderVec enc{{}, model};
    for (std::size_t n = 0; n < partitions.size(); ++n) {
        const int k = static_cast<int>(marginals[n].size());
        Partition p = partitions[n];
        for (auto& b : p) std::sort(b.begin(), b.end());
        std::erase_if(p, [](const auto& b) { return b.empty(); });
        std::sort(p.begin(), p.end());
        std::vector<int> color(k, -1);
        for (std::size_t b = 0; b < p.size(); ++b)
            for (int x : p[b]) {
                if (x < 0 || x >= k || color[x] >= 0) throw ValidationError("invalid partition");
                color[x] = static_cast<int>(b);
            }
        int colors = std::max<int>(1, static_cast<int>(p.size()));
        for (int& c : color)
            if (c < 0) c = 0;
        enc.nodes.push_back(make_node(std::move(color), colors, marginals[n]));
    }
    return enc;
}

EncoderVec mis_encoder(const StateIndexer& ix, const ControlMap& phi,
                       const std::vector<Vector>& marginals, const SupportSets& support,
                       LengthModel model) {
    std::vector<Partition> parts;
    for (int n = 0; n < ix.nodes(); ++n)
        parts.push_back(
            mis_partition_on(build_characteristic_graph(ix, support, phi, n), support[n]));
    return encoder_from_partitions(parts, marginals, model);
}

Decoding decodable(const StateIndexer& ix, const ControlMap& phi, const EncoderVec& enc,
                   const SupportSets* support) {
    Decoding d{true, {}};
    for (int s = 0; s < ix.size(); ++s) {
        if (support && !on_support(ix, *support, s)) continue;
        auto [it, inserted] = d.decision.emplace(enc.message_tuple(ix, s), phi[s]);
        if (!inserted && it->second != phi[s]) d.ok = false;
    }
    if (!d.ok) d.decision.clear();
    return d;
}

const char* to_string(Weighting w) { return w == Weighting::stationary ? "stationary" : "occupancy"; }

Weighting weighting_from_string(const std::string& s) {
    if (s == "stationary") return Weighting::stationary;
    if (s == "occupancy") return Weighting::occupancy;
    throw ValidationError("unknown weighting '" + s + "'");
}

Vector state_weighting(const FactoredMdp& mdp, const ControlMap& phi, Weighting w) {
    if (w == Weighting::stationary) return stationary_distribution(mdp, phi);
    return discounted_occupancy(mdp, phi, true).weights;
}

std::vector<Partition> set_partitions(const std::vector<int>& symbols) {
    const int k = static_cast<int>(symbols.size());
    std::vector<Partition> out;
    if (k == 0) {
        out.emplace_back();
        return out;
    }
    std::vector<int> rgs(k, 0), maxv(k, 0);
    while (true) {
        int blocks = *std::max_element(rgs.begin(), rgs.end()) + 1;
        Partition p(blocks);
        for (int i = 0; i < k; ++i) p[rgs[i]].push_back(symbols[i]);
        out.push_back(std::move(p));
        int i = k - 1;
        while (i > 0 && rgs[i] == maxv[i - 1] + 1) --i;
        if (i == 0) break;
        ++rgs[i];
        maxv[i] = std::max(maxv[i - 1], rgs[i]);
        for (int j = i + 1; j < k; ++j) {
            rgs[j] = 0;
            maxv[j] = maxv[i];
        }
    }
    return out;
}

namespace {

double partition_cost(const Partition& p, const Vector& marginal, LengthModel objective) {
    Vector dist(static_cast<Eigen::Index>(p.size()));
    for (std::size_t b = 0; b < p.size(); ++b) {
        double mass = 0.0;
        for (int x : p[b]) mass += marginal(x);
        dist(static_cast<Eigen::Index>(b)) = mass;
    }
    if (objective == LengthModel::entropy) return entropy_bits(dist);
    return huffman_code(dist).expected_length(dist);
}

struct NodeOptions {
    std::vector<Partition> parts;
    std::vector<double> cost;
};

class PartitionSearch {
public:
    PartitionSearch(const StateIndexer& ix, const CandidateSet& cand,
                    const std::vector<Vector>& marginals, const RateOptions& opt)
        : ix_(ix), cand_(cand), marg_(marginals), opt_(opt) {
        support_ = positive_supports(marginals);
        for (int n = 0; n < ix.nodes(); ++n) {
            std::vector<int> s;
            for (int x = 0; x < ix.radix(n); ++x)
                if (support_[n][x]) s.push_back(x);
            sup_.push_back(std::move(s));
        }
        dp_node_ = 0;
        for (int n = 1; n < ix.nodes(); ++n)
            if (sup_[n].size() > sup_[dp_node_].size()) dp_node_ = n;
    }

    const SupportSets& support() const { return support_; }

    double work_estimate() const {
        double w = std::pow(3.0, static_cast<double>(sup_[dp_node_].size()));
        for (int n = 0; n < ix_.nodes(); ++n)
            if (n != dp_node_) w *= bell(static_cast<int>(sup_[n].size()));
        return w;
    }

    /// Best partitions in support-symbol terms; returns false if nothing feasible.
    bool run(std::vector<Partition>& best_parts, double& searched) {
        const int kd = static_cast<int>(sup_[dp_node_].size());
        if (kd > 20) throw BudgetError("support of a node exceeds 20 symbols");
        for (int n = 0; n < ix_.nodes(); ++n) {
            if (n == dp_node_) continue;
            NodeOptions o;
            o.parts = set_partitions(sup_[n]);
            for (const auto& p : o.parts) o.cost.push_back(partition_cost(p, marg_[n], opt_.objective));
            std::vector<std::size_t> order(o.parts.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return o.cost[a] < o.cost[b]; });
            NodeOptions sorted;
            for (std::size_t i : order) {
                sorted.parts.push_back(o.parts[i]);
                sorted.cost.push_back(o.cost[i]);
            }
            others_.push_back(n);
            options_.push_back(std::move(sorted));
        }
        mass_.assign(std::size_t{1} << kd, 0.0);
        for (std::size_t m = 1; m < mass_.size(); ++m) {
            int low = std::countr_zero(m);
            mass_[m] = mass_[m & (m - 1)] + marg_[dp_node_](sup_[dp_node_][low]);
        }
        chosen_.assign(others_.size(), 0);
        best_ = std::numeric_limits<double>::infinity();
        searched_ = 0;
        recurse(0, 0.0);
        searched = searched_;
        if (!std::isfinite(best_)) return false;
        best_parts = best_parts_;
        return true;
    }

private:
    static double bell(int k) {
        std::vector<std::vector<double>> t(k + 1, std::vector<double>(k + 1, 0.0));
        t[0][0] = 1.0;
        for (int i = 1; i <= k; ++i) {
            t[i][0] = t[i - 1][i - 1];
            for (int j = 1; j <= i; ++j) t[i][j] = t[i][j - 1] + t[i - 1][j - 1];
        }
        return t[k][0];
    }

    void recurse(std::size_t depth, double partial) {
        if (partial >= best_ - 1e-12) return;
        if (depth == others_.size()) {
            leaf(partial);
            return;
        }
        const auto& o = options_[depth];
        for (std::size_t i = 0; i < o.parts.size(); ++i) {
            if (partial + o.cost[i] >= best_ - 1e-12) break;  // costs sorted ascending
            chosen_[depth] = i;
            recurse(depth + 1, partial + o.cost[i]);
        }
    }

    template <class Radix>
    static bool advance(std::vector<std::size_t>& digits, Radix radix) {
        for (std::size_t k = digits.size(); k-- > 0;) {
            if (++digits[k] < radix(k)) return true;
            digits[k] = 0;
        }
        return false;
    }

    // Intersections of candidate masks over block products, one entry per dp-node symbol.
    bool block_masks(std::vector<std::vector<ActionMask>>& out) const {
        const int kd = static_cast<int>(sup_[dp_node_].size());
        const std::size_t m = others_.size();
        std::vector<const Partition*> parts(m);
        for (std::size_t k = 0; k < m; ++k) parts[k] = &options_[k].parts[chosen_[k]];
        out.clear();
        std::vector<std::size_t> pick(m, 0);
        std::vector<int> local(ix_.nodes(), 0);
        do {
            std::vector<ActionMask> row(kd, ~ActionMask{0});
            std::vector<std::size_t> member(m, 0);
            do {
                for (std::size_t k = 0; k < m; ++k)
                    local[others_[k]] = (*parts[k])[pick[k]][member[k]];
                for (int j = 0; j < kd; ++j) {
                    local[dp_node_] = sup_[dp_node_][j];
                    row[j] &= cand_.allowed[ix_.index(local)];
                }
            } while (advance(member, [&](std::size_t k) { return (*parts[k])[pick[k]].size(); }));
            for (ActionMask a : row)
                if (!a) return false;
            out.push_back(std::move(row));
        } while (advance(pick, [&](std::size_t k) { return parts[k]->size(); }));
        return true;
    }

    void leaf(double partial) {
        searched_ += 1.0;
        std::vector<std::vector<ActionMask>> rows;
        if (!block_masks(rows)) return;
        const int kd = static_cast<int>(sup_[dp_node_].size());
        const std::size_t full = (std::size_t{1} << kd) - 1;
        std::vector<char> ok(full + 1, 1);
        std::vector<ActionMask> inter(full + 1);
        for (const auto& row : rows) {
            inter[0] = ~ActionMask{0};
            for (std::size_t m = 1; m <= full; ++m) {
                inter[m] = inter[m & (m - 1)] & row[std::countr_zero(m)];
                if (!inter[m]) ok[m] = 0;
            }
        }
        std::vector<double> f(full + 1, 0.0);
        std::vector<std::size_t> choice(full + 1, 0);
        for (std::size_t m = 1; m <= full; ++m) {
            const std::size_t low = m & (~m + 1);
            double bestv = std::numeric_limits<double>::infinity();
            for (std::size_t sub = m; sub; sub = (sub - 1) & m) {
                if (!(sub & low) || !ok[sub]) continue;
                double v = f[m ^ sub] + entropy_term(mass_[sub]);
                if (v < bestv) {
                    bestv = v;
                    choice[m] = sub;
                }
            }
            f[m] = bestv;
        }
        if (opt_.objective == LengthModel::entropy) {
            double total = partial + f[full];
            if (total < best_ - 1e-12) {
                best_ = total;
                std::vector<std::size_t> blocks;
                for (std::size_t m = full; m; m ^= choice[m]) blocks.push_back(choice[m]);
                record(blocks);
            }
            return;
        }
        // Expected Huffman length is at least the entropy minimum.
        if (partial + f[full] >= best_ - 1e-12) return;
        std::vector<std::size_t> blocks;
        enumerate_huffman(full, blocks, partial, ok);
    }

    void enumerate_huffman(std::size_t remaining, std::vector<std::size_t>& blocks, double partial,
                           const std::vector<char>& ok) {
        if (!remaining) {
            Vector dist(static_cast<Eigen::Index>(blocks.size()));
            for (std::size_t b = 0; b < blocks.size(); ++b) dist(static_cast<Eigen::Index>(b)) = mass_[blocks[b]];
            double total = partial + huffman_code(dist).expected_length(dist);
            if (total < best_ - 1e-12) {
                best_ = total;
                record(blocks);
            }
            return;
        }
        const std::size_t low = remaining & (~remaining + 1);
        for (std::size_t sub = remaining; sub; sub = (sub - 1) & remaining) {
            if (!(sub & low) || !ok[sub]) continue;
            blocks.push_back(sub);
            enumerate_huffman(remaining ^ sub, blocks, partial, ok);
            blocks.pop_back();
        }
    }

    void record(const std::vector<std::size_t>& dp_blocks) {
        best_parts_.assign(ix_.nodes(), {});
        for (std::size_t k = 0; k < others_.size(); ++k)
            best_parts_[others_[k]] = options_[k].parts[chosen_[k]];
        Partition p;
        for (std::size_t m : dp_blocks) {
            std::vector<int> b;
            for (int j = 0; j < static_cast<int>(sup_[dp_node_].size()); ++j)
                if (m >> j & 1U) b.push_back(sup_[dp_node_][j]);
            p.push_back(std::move(b));
        }
        std::sort(p.begin(), p.end());
        best_parts_[dp_node_] = std::move(p);
    }

    const StateIndexer& ix_;
    const CandidateSet& cand_;
    const std::vector<Vector>& marg_;
    const RateOptions& opt_;
    SupportSets support_;
    std::vector<std::vector<int>> sup_;
    int dp_node_ = 0;
    std::vector<int> others_;
    std::vector<NodeOptions> options_;
    std::vector<double> mass_;
    std::vector<std::size_t> chosen_;
    double best_ = 0.0;
    double searched_ = 0.0;
    std::vector<Partition> best_parts_;
};

// Fiber-constant candidate-optimal map for a feasible partition tuple.
ControlMap map_from_partitions(const StateIndexer& ix, const CandidateSet& cand,
                               const SupportSets& support, const std::vector<Partition>& parts) {
    std::vector<std::vector<int>> block_of(ix.nodes());
    for (int n = 0; n < ix.nodes(); ++n) {
        block_of[n].assign(ix.radix(n), -1);
        for (std::size_t b = 0; b < parts[n].size(); ++b)
            for (int x : parts[n][b]) block_of[n][x] = static_cast<int>(b);
    }
    std::map<std::vector<int>, ActionMask> inter;
    for (int s = 0; s < ix.size(); ++s) {
        if (!on_support(ix, support, s)) continue;
        std::vector<int> key(ix.nodes());
        for (int n = 0; n < ix.nodes(); ++n) key[n] = block_of[n][ix.digit(s, n)];
        auto [it, inserted] = inter.emplace(key, cand.allowed[s]);
        if (!inserted) it->second &= cand.allowed[s];
    }
    ControlMap phi = cand.lowest();
    for (int s = 0; s < ix.size(); ++s) {
        if (!on_support(ix, support, s)) continue;
        std::vector<int> key(ix.nodes());
        for (int n = 0; n < ix.nodes(); ++n) key[n] = block_of[n][ix.digit(s, n)];
        ActionMask m = inter.at(key);
        if (!m) throw NumericError("partition search returned an infeasible tuple");
        phi[s] = std::countr_zero(m);
    }
    return phi;
}

} // namespace

RateResult noninteractive_min_rate(const StateIndexer& ix, const CandidateSet& candidates,
                                   const std::vector<Vector>& marginals, const RateOptions& options) {
    if (candidates.num_states() != ix.size()) throw ValidationError("candidate set has wrong size");
    if (static_cast<int>(marginals.size()) != ix.nodes()) throw ValidationError("need one marginal per node");
    PartitionSearch search(ix, candidates, marginals, options);
    RateResult out;
    const SupportSets& support = search.support();
    if (search.work_estimate() > options.budget) {
        if (!options.allow_approximate) {
            std::ostringstream msg;
            msg << "partition search needs about " << search.work_estimate()
                << " steps, above the budget of " << options.budget
                << "; raise the budget or allow the approximate mode";
            throw BudgetError(msg.str());
        }
        out.phi = candidates.lowest();
        out.approximate = true;
    } else {
        std::vector<Partition> parts;
        if (!search.run(parts, out.partitions_searched))
            throw NumericError("no feasible encoder found");
        out.phi = map_from_partitions(ix, candidates, support, parts);
    }
    out.encoder = mis_encoder(ix, out.phi, marginals, support, options.objective);
    for (const auto& e : out.encoder.nodes)
        out.partitions.push_back(partition_from_coloring({e.color_of, e.num_colors()}));
    out.entropy_rate = out.encoder.entropy_rate();
    out.huffman_rate = out.encoder.huffman_rate();
    return out;
}

RateResult noninteractive_min_rate(const FactoredMdp& mdp, const CandidateSet& candidates,
                                   const RateOptions& options) {
    ControlMap ref = options.reference ? *options.reference : candidates.lowest();
    Vector w = state_weighting(mdp, ref, options.weighting);
    RateResult r = noninteractive_min_rate(mdp.indexer(), candidates, node_marginals(mdp.indexer(), w),
                                           options);
    r.weighting = options.weighting;
    return r;
}

std::string dump_encoder(const FactoredMdp& mdp, const EncoderVec& enc) {
    std::ostringstream os;
    os << "# node symbol color codeword\n";
    for (int n = 0; n < mdp.num_nodes(); ++n) {
        const auto& l = mdp.locals()[n];
        for (int x = 0; x < l.size(); ++x) {
            int c = enc.nodes[n].color_of[x];
            const std::string& w = enc.nodes[n].code.codewords[c];
            os << l.name << ' ' << l.symbols[x] << ' ' << c << ' ' << (w.empty() ? "-" : w) << '\n';
        }
    }
    return os.str();
}

} // namespace dmdp

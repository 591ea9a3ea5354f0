#include "dmdp/interactive.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "dmdp/error.hpp"

namespace dmdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void compositions(int d, int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == d - 1) {
        cur.push_back(k);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int v = k; v >= 0; --v) {
        cur.push_back(v);
        compositions(d, k - v, cur, out);
        cur.pop_back();
    }
}

int support_mask(const Vector& p) {
    int m = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i) > 0.0) m |= 1 << i;
    return m;
}

template <class Fn>
void for_each_state_in(const StateIndexer& ix, const std::vector<int>& masks, Fn fn) {
    std::vector<int> local(ix.nodes(), 0);
    std::vector<std::vector<int>> symbols(ix.nodes());
    for (int n = 0; n < ix.nodes(); ++n)
        for (int x = 0; x < ix.radix(n); ++x)
            if (masks[n] >> x & 1) symbols[n].push_back(x);
    for (const auto& s : symbols)
        if (s.empty()) return;
    std::vector<std::size_t> pos(ix.nodes(), 0);
    while (true) {
        for (int n = 0; n < ix.nodes(); ++n) local[n] = symbols[n][pos[n]];
        fn(ix.index(local));
        int n = ix.nodes() - 1;
        while (n >= 0 && ++pos[n] == symbols[n].size()) pos[n--] = 0;
        if (n < 0) return;
    }
}

ActionMask common_actions(const StateIndexer& ix, const CandidateSet& cand,
                          const std::vector<int>& masks) {
    ActionMask m = ~ActionMask{0};
    for_each_state_in(ix, masks, [&](int s) { m &= cand.allowed[s]; });
    return m;
}

} // namespace

SimplexGrid SimplexGrid::lattice(int dimension, int resolution) {
    if (dimension < 1 || resolution < 1) throw ValidationError("grid needs dimension and resolution >= 1");
    SimplexGrid g{dimension, resolution, {}};
    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    compositions(dimension, resolution, cur, comps);
    for (const auto& c : comps) {
        Vector p(dimension);
        for (int i = 0; i < dimension; ++i) p(i) = static_cast<double>(c[i]) / resolution;
        g.points.push_back(std::move(p));
    }
    return g;
}

SimplexGrid SimplexGrid::with_restrictions(int dimension, int resolution, const Vector& target) {
    if (target.size() != dimension) throw ValidationError("target has wrong dimension");
    SimplexGrid g = lattice(dimension, resolution);
    auto add = [&](const Vector& p) {
        if (g.find(p) < 0) g.points.push_back(p);
    };
    add(target);
    const int supp = support_mask(target);
    for (int sub = supp; sub; sub = (sub - 1) & supp) {
        Vector p = Vector::Zero(dimension);
        for (int i = 0; i < dimension; ++i)
            if (sub >> i & 1) p(i) = target(i);
        add(p / p.sum());
    }
    return g;
}

int SimplexGrid::find(const Vector& p) const {
    for (int i = 0; i < size(); ++i)
        if ((points[i] - p).cwiseAbs().maxCoeff() <= 1e-12) return i;
    return -1;
}

std::vector<int> RateReductionTable::decode(int index) const {
    std::vector<int> c(grids.size());
    for (int n = static_cast<int>(grids.size()) - 1; n >= 0; --n) {
        c[n] = index % grids[n].size();
        index /= grids[n].size();
    }
    return c;
}

int RateReductionTable::encode(const std::vector<int>& coords) const {
    int idx = 0;
    for (std::size_t n = 0; n < grids.size(); ++n) idx = idx * grids[n].size() + coords[n];
    return idx;
}

Extended rho0(const StateIndexer& ix, const CandidateSet& candidates,
              const std::vector<Vector>& marginals) {
    std::vector<int> masks;
    double h = 0.0;
    for (const auto& m : marginals) {
        masks.push_back(support_mask(m));
        h += entropy_bits(m);
    }
    if (!common_actions(ix, candidates, masks)) return std::nullopt;
    return h;
}

RateReductionTable initial_table(const StateIndexer& ix, const CandidateSet& candidates,
                                 std::vector<SimplexGrid> grids) {
    if (static_cast<int>(grids.size()) != ix.nodes()) throw ValidationError("need one grid per node");
    RateReductionTable t;
    t.grids = std::move(grids);
    std::size_t total = 1;
    for (const auto& g : t.grids) total *= static_cast<std::size_t>(g.size());
    t.values.resize(total);
    std::unordered_map<long long, bool> constant;
    for (int i = 0; i < t.size(); ++i) {
        auto coords = t.decode(i);
        std::vector<int> masks;
        long long key = 0;
        double h = 0.0;
        for (int n = 0; n < ix.nodes(); ++n) {
            const Vector& p = t.grids[n].points[coords[n]];
            masks.push_back(support_mask(p));
            key = (key << ix.radix(n)) | masks.back();
            h += entropy_bits(p);
        }
        auto it = constant.find(key);
        if (it == constant.end())
            it = constant.emplace(key, common_actions(ix, candidates, masks) != 0).first;
        if (it->second) t.values[i] = h;
    }
    return t;
}

RateReductionTable concavify_step(const RateReductionTable& table, int speaker) {
    RateReductionTable out = table;
    out.round = table.round + 1;
    const int nodes = static_cast<int>(table.grids.size());
    if (speaker < 0 || speaker >= nodes) throw ValidationError("speaker out of range");
    int stride = 1;
    for (int n = nodes - 1; n > speaker; --n) stride *= table.grids[n].size();
    const int len = table.grids[speaker].size();
    std::vector<Extended> slice(len);
    for (int base = 0; base < table.size(); ++base) {
        if ((base / stride) % len != 0) continue;
        bool any = false;
        for (int j = 0; j < len; ++j) {
            slice[j] = table.values[base + j * stride];
            any = any || slice[j].has_value();
        }
        if (!any) continue;
        auto env = upper_concave_envelope(table.grids[speaker].points, slice);
        for (int j = 0; j < len; ++j) out.values[base + j * stride] = env[j];
    }
    return out;
}

BoundResult interactive_rate_bound(const StateIndexer& ix, const CandidateSet& candidates,
                                   const std::vector<Vector>& marginals, int rounds,
                                   const BoundOptions& options) {
    if (rounds < 0) throw ValidationError("round count must be nonnegative");
    if (ix.nodes() > options.max_nodes) throw BudgetError("interactive bound supports at most 3 nodes");
    int max_d = 0;
    for (int n = 0; n < ix.nodes(); ++n) {
        if (ix.radix(n) > options.max_support)
            throw BudgetError("interactive bound supports at most 4 symbols per node");
        max_d = std::max(max_d, ix.radix(n));
    }
    int k = options.resolution;
    if (k <= 0) k = max_d <= 2 ? 64 : max_d == 3 ? 16 : (ix.nodes() <= 2 ? 8 : 4);
    std::vector<SimplexGrid> grids;
    double table = 1.0;
    for (int n = 0; n < ix.nodes(); ++n) {
        grids.push_back(SimplexGrid::with_restrictions(ix.radix(n), k, marginals[n]));
        table *= grids.back().size();
    }
    if (table > options.max_table) throw BudgetError("rate-reduction table exceeds its budget");

    double h = 0.0;
    std::vector<int> target;
    for (int n = 0; n < ix.nodes(); ++n) {
        h += entropy_bits(marginals[n]);
        target.push_back(grids[n].find(marginals[n]));
    }
    BoundResult r;
    r.resolution = k;
    RateReductionTable t = initial_table(ix, candidates, std::move(grids));
    const int at = t.encode(target);
    auto rate_of = [&](const RateReductionTable& tab) {
        const Extended& v = tab.values[at];
        return v ? std::max(0.0, h - *v) : kInf;
    };
    r.by_round.push_back(rate_of(t));
    for (int round = 1; round <= rounds; ++round) {
        t = concavify_step(t, speaker_of_round(round, ix.nodes()));
        r.by_round.push_back(std::min(r.by_round.back(), rate_of(t)));
    }
    r.rate = r.by_round.back();
    return r;
}

const char* to_string(ProtocolMode m) {
    return m == ProtocolMode::heterogeneous ? "heterogeneous" : "homogeneous";
}

ProtocolMode protocol_mode_from_string(const std::string& s) {
    if (s == "heterogeneous" || s == "hetero") return ProtocolMode::heterogeneous;
    if (s == "homogeneous" || s == "homo") return ProtocolMode::homogeneous;
    throw ValidationError("unknown protocol mode '" + s + "'");
}

namespace {

class ProtocolSearch {
public:
    ProtocolSearch(const StateIndexer& ix, const CandidateSet& cand,
                   const std::vector<Vector>& marg, int rounds, const ProtocolOptions& opt)
        : ix_(ix), cand_(cand), marg_(marg), rounds_(rounds), opt_(opt) {
        int bits = 0;
        for (int n = 0; n < ix.nodes(); ++n) {
            bits += ix.radix(n);
            full_.push_back(support_mask(marg[n]));
        }
        if (bits > 48) throw BudgetError("scalar protocol search supports at most 48 local symbols in total");
    }

    double solve(const std::vector<int>& rect, int round) {
        const long long key = encode(rect, round);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second.cost;
        Entry e;
        if (decided(rect)) {
            e.cost = 0.0;
        } else if (round == rounds_) {
            e.cost = kInf;
        } else if (opt_.mode == ProtocolMode::heterogeneous) {
            const int n = round % ix_.nodes();
            for (const auto& blocks : partitions(n, rect[n])) {
                double c = round_cost(n, rect[n], blocks);
                for (int b : blocks) {
                    if (c >= e.cost) break;
                    auto next = rect;
                    next[n] = b;
                    c += conditional(n, b, rect[n]) * solve(next, round + 1);
                }
                if (c < e.cost) {
                    e.cost = c;
                    e.choice = {blocks};
                }
            }
        } else {
            std::vector<const std::vector<std::vector<int>>*> opts;
            for (int n = 0; n < ix_.nodes(); ++n) opts.push_back(&partitions(n, rect[n]));
            std::vector<std::size_t> pick(ix_.nodes(), 0);
            while (true) {
                std::vector<std::vector<int>> choice;
                double c = 0.0;
                for (int n = 0; n < ix_.nodes(); ++n) {
                    choice.push_back((*opts[n])[pick[n]]);
                    c += round_cost(n, rect[n], choice.back());
                }
                c += continuation(rect, round, choice, e.cost - c);
                if (c < e.cost) {
                    e.cost = c;
                    e.choice = std::move(choice);
                }
                int n = ix_.nodes() - 1;
                while (n >= 0 && ++pick[n] == opts[n]->size()) pick[n--] = 0;
                if (n < 0) break;
            }
        }
        memo_[key] = e;
        return e.cost;
    }

    std::unique_ptr<ProtocolNode> build(const std::vector<int>& rect, int round) {
        auto node = std::make_unique<ProtocolNode>();
        node->round = round;
        node->subsets = rect;
        if (ActionMask m = common_actions(ix_, cand_, rect)) {
            node->action = std::countr_zero(m);
            return node;
        }
        const Entry& e = memo_.at(encode(rect, round));
        if (!std::isfinite(e.cost)) return nullptr;
        if (opt_.mode == ProtocolMode::heterogeneous) node->speakers = {round % ix_.nodes()};
        else
            for (int n = 0; n < ix_.nodes(); ++n) node->speakers.push_back(n);
        for (std::size_t i = 0; i < node->speakers.size(); ++i)
            node->quantizers.push_back(to_partition(e.choice[i]));
        // Children in lexicographic order of the speakers' block indices.
        std::vector<std::size_t> pick(node->speakers.size(), 0);
        while (true) {
            auto next = rect;
            for (std::size_t i = 0; i < pick.size(); ++i) next[node->speakers[i]] = e.choice[i][pick[i]];
            node->children.push_back(build(next, round + 1));
            int i = static_cast<int>(pick.size()) - 1;
            while (i >= 0 && ++pick[i] == e.choice[i].size()) pick[i--] = 0;
            if (i < 0) break;
        }
        return node;
    }

    const std::vector<int>& full() const { return full_; }

private:
    struct Entry {
        double cost = kInf;
        std::vector<std::vector<int>> choice;  // per speaker, block masks
    };

    long long encode(const std::vector<int>& rect, int round) const {
        long long key = round;
        for (int n = 0; n < ix_.nodes(); ++n) key = (key << ix_.radix(n)) | rect[n];
        return key;
    }

    bool decided(const std::vector<int>& rect) {
        long long key = encode(rect, 0);
        if (auto it = decided_.find(key); it != decided_.end()) return it->second;
        bool d = common_actions(ix_, cand_, rect) != 0;
        decided_[key] = d;
        return d;
    }

    double mass(int n, int mask) const {
        double m = 0.0;
        for (int x = 0; x < ix_.radix(n); ++x)
            if (mask >> x & 1) m += marg_[n](x);
        return m;
    }

    double conditional(int n, int block, int within) const { return mass(n, block) / mass(n, within); }

    double round_cost(int n, int within, const std::vector<int>& blocks) {
        if (blocks.size() <= 1) return 0.0;
        if (++work_ > opt_.budget) throw BudgetError("scalar protocol search exceeded its budget; try a smaller instance");
        Vector q(static_cast<Eigen::Index>(blocks.size()));
        for (std::size_t b = 0; b < blocks.size(); ++b)
            q(static_cast<Eigen::Index>(b)) = conditional(n, blocks[b], within);
        return opt_.length == LengthModel::huffman ? huffman_code(q).expected_length(q) : entropy_bits(q);
    }

    double continuation(const std::vector<int>& rect, int round,
                        const std::vector<std::vector<int>>& choice, double cap) {
        double c = 0.0;
        std::vector<std::size_t> pick(choice.size(), 0);
        while (true) {
            auto next = rect;
            double p = 1.0;
            for (std::size_t n = 0; n < choice.size(); ++n) {
                next[n] = choice[n][pick[n]];
                p *= conditional(static_cast<int>(n), next[n], rect[n]);
            }
            c += p * solve(next, round + 1);
            if (c >= cap) return kInf;
            int n = static_cast<int>(pick.size()) - 1;
            while (n >= 0 && ++pick[n] == choice[n].size()) pick[n--] = 0;
            if (n < 0) break;
        }
        return c;
    }

    // Partitions of `mask` into at most max_alphabet blocks, blocks as masks; cached.
    const std::vector<std::vector<int>>& partitions(int n, int mask) {
        long long key = (static_cast<long long>(n) << 32) | mask;
        if (auto it = partitions_.find(key); it != partitions_.end()) return it->second;
        std::vector<int> symbols;
        for (int x = 0; x < ix_.radix(n); ++x)
            if (mask >> x & 1) symbols.push_back(x);
        std::vector<std::vector<int>> out;
        for (const auto& p : set_partitions(symbols)) {
            if (static_cast<int>(p.size()) > opt_.max_alphabet) continue;
            std::vector<int> blocks;
            for (const auto& b : p) {
                int m = 0;
                for (int x : b) m |= 1 << x;
                blocks.push_back(m);
            }
            out.push_back(std::move(blocks));
        }
        return partitions_.emplace(key, std::move(out)).first->second;
    }

    Partition to_partition(const std::vector<int>& blocks) const {
        Partition p;
        for (int m : blocks) {
            std::vector<int> b;
            for (int x = 0; x < 31; ++x)
                if (m >> x & 1) b.push_back(x);
            p.push_back(std::move(b));
        }
        return p;
    }

    const StateIndexer& ix_;
    const CandidateSet& cand_;
    const std::vector<Vector>& marg_;
    int rounds_;
    const ProtocolOptions& opt_;
    std::vector<int> full_;
    std::unordered_map<long long, Entry> memo_;
    std::unordered_map<long long, bool> decided_;
    std::unordered_map<long long, std::vector<std::vector<int>>> partitions_;
    double work_ = 0.0;
};

} // namespace

ProtocolResult optimal_scalar_protocol(const StateIndexer& ix, const CandidateSet& candidates,
                                       const std::vector<Vector>& marginals, int rounds,
                                       const ProtocolOptions& options) {
    if (rounds < 0) throw ValidationError("round count must be nonnegative");
    if (options.max_alphabet < 1) throw ValidationError("alphabet must have at least one symbol");
    if (static_cast<int>(marginals.size()) != ix.nodes()) throw ValidationError("need one marginal per node");
    ProtocolSearch search(ix, candidates, marginals, rounds, options);
    ProtocolResult r;
    r.protocol.rounds = rounds;
    r.protocol.mode = options.mode;
    r.rate = search.solve(search.full(), 0);
    if (std::isfinite(r.rate)) r.protocol.root = search.build(search.full(), 0);
    return r;
}

int protocol_action(const InteractiveProtocol& p, const StateIndexer& ix, int state) {
    const ProtocolNode* node = p.root.get();
    while (node && !node->leaf()) {
        std::size_t child = 0;
        for (std::size_t i = 0; i < node->speakers.size(); ++i) {
            const int x = ix.digit(state, node->speakers[i]);
            const Partition& q = node->quantizers[i];
            std::size_t b = 0;
            while (b < q.size() && std::find(q[b].begin(), q[b].end(), x) == q[b].end()) ++b;
            if (b == q.size()) return -1;
            child = child * q.size() + b;
        }
        node = node->children[child].get();
    }
    return node ? node->action : -1;
}

bool protocol_decodable(const InteractiveProtocol& p, const StateIndexer& ix,
                        const CandidateSet& candidates, const SupportSets& support) {
    for (int s = 0; s < ix.size(); ++s) {
        bool inside = true;
        for (int n = 0; n < ix.nodes(); ++n) inside = inside && support[n][ix.digit(s, n)];
        if (!inside) continue;
        int a = protocol_action(p, ix, s);
        if (a < 0 || !(candidates.allowed[s] >> a & 1U)) return false;
    }
    return true;
}

static void dump_node(const ProtocolNode* node, int depth, std::ostringstream& os) {
    std::string pad(2 * depth, ' ');
    if (!node) {
        os << pad << "undecided\n";
        return;
    }
    if (node->leaf()) {
        os << pad << "decide " << node->action << '\n';
        return;
    }
    os << pad << "round " << node->round + 1 << ':';
    for (std::size_t i = 0; i < node->speakers.size(); ++i) {
        os << " node" << node->speakers[i] << " {";
        for (std::size_t b = 0; b < node->quantizers[i].size(); ++b) {
            os << (b ? "|" : "");
            for (std::size_t j = 0; j < node->quantizers[i][b].size(); ++j)
                os << (j ? "," : "") << node->quantizers[i][b][j];
        }
        os << '}';
    }
    os << '\n';
    for (const auto& c : node->children) dump_node(c.get(), depth + 1, os);
}

std::string dump_protocol(const InteractiveProtocol& p) {
    std::ostringstream os;
    os << "# protocol " << to_string(p.mode) << " rounds=" << p.rounds << '\n';
    dump_node(p.root.get(), 0, os);
    return os.str();
}

FactoredMdp argmax_mdp(const std::vector<int>& supports) {
    std::vector<LocalStateSpace> locals;
    for (std::size_t n = 0; n < supports.size(); ++n) {
        LocalStateSpace l{"x" + std::to_string(n + 1), {}};
        for (int v = 0; v < supports[n]; ++v) l.symbols.push_back(std::to_string(v));
        locals.push_back(std::move(l));
    }
    StateIndexer ix(supports);
    const int S = ix.size();
    std::vector<std::string> actions;
    std::vector<Matrix> kernel, reward;
    for (std::size_t a = 0; a < supports.size(); ++a) {
        actions.push_back("pick" + std::to_string(a + 1));
        kernel.push_back(Matrix::Constant(S, S, 1.0 / S));
        Matrix r(S, S);
        for (int s = 0; s < S; ++s) r.row(s).setConstant(ix.digit(s, static_cast<int>(a)));
        reward.push_back(std::move(r));
    }
    return FactoredMdp(std::move(locals), std::move(actions), std::move(kernel), std::move(reward), 0.0,
                       Vector::Constant(S, 1.0 / S));
}

} // namespace dmdp

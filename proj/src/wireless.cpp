#include "dmdp/wireless.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "dmdp/error.hpp"
#include "dmdp/markov_chain.hpp"

namespace dmdp {

Matrix WirelessConfig::iid(const Vector& probs) {
    Matrix m(probs.size(), probs.size());
    for (Eigen::Index r = 0; r < probs.size(); ++r) m.row(r) = probs.transpose();
    return m;
}

void WirelessConfig::validate() const {
    if (n_users < 1) throw ValidationError("wireless model needs at least one user");
    if (static_cast<int>(channel_support.size()) != n_users ||
        static_cast<int>(channel_transition.size()) != n_users)
        throw ValidationError("need one channel support and transition per user");
    for (int u = 0; u < n_users; ++u) {
        const auto& sup = channel_support[u];
        if (sup.empty()) throw ValidationError("empty channel support");
        if (!std::is_sorted(sup.begin(), sup.end()) ||
            std::adjacent_find(sup.begin(), sup.end()) != sup.end() || sup.front() < 0)
            throw ValidationError("channel support must be increasing nonnegative integers");
        const Matrix& t = channel_transition[u];
        if (t.rows() != static_cast<Eigen::Index>(sup.size()) || t.cols() != t.rows())
            throw ValidationError("channel transition shape does not match support");
        validate_stochastic({t});
    }
    if (arrival_support.empty() ||
        arrival_probs.size() != static_cast<Eigen::Index>(arrival_support.size()))
        throw ValidationError("arrival support and probabilities must match");
    if (*std::min_element(arrival_support.begin(), arrival_support.end()) < 0)
        throw ValidationError("arrival support must be nonnegative");
    if ((arrival_probs.array() < 0.0).any() || std::abs(arrival_probs.sum() - 1.0) > 1e-12)
        throw ValidationError("arrival probabilities must sum to 1");
    if (buffer_max < 0) throw ValidationError("buffer_max must be nonnegative");
    if (!(discount >= 0.0 && discount < 1.0)) throw ValidationError("discount must lie in [0,1)");
    if (!initial_channel.empty()) {
        if (static_cast<int>(initial_channel.size()) != n_users)
            throw ValidationError("initial_channel needs one entry per user");
        for (int u = 0; u < n_users; ++u)
            if (initial_channel[u] < 0 ||
                initial_channel[u] >= static_cast<int>(channel_support[u].size()))
                throw ValidationError("initial_channel index out of range");
    }
}

std::vector<std::vector<int>> buffer_states(int n_users, int bu_max) {
    std::vector<std::vector<int>> out;
    std::vector<int> b(n_users, 0);
    // Odometer over [0, bu_max]^N, keeping tuples within capacity.
    while (true) {
        if (std::accumulate(b.begin(), b.end(), 0) <= bu_max) out.push_back(b);
        int n = n_users - 1;
        while (n >= 0 && b[n] == bu_max) b[n--] = 0;
        if (n < 0) break;
        ++b[n];
    }
    return out;
}

std::vector<int> transmit_vector(int action, const WirelessState& state) {
    const int n = static_cast<int>(state.buffer.size());
    if (action < 0 || action >= n || state.channel.size() != state.buffer.size())
        throw ValidationError("invalid scheduled user");
    std::vector<int> t(n, 0);
    t[action] = std::min(state.channel[action], state.buffer[action]);
    return t;
}

DropResult drop_packets(std::vector<int> buffer, std::vector<int> arrivals, int bu_max) {
    const int n = static_cast<int>(buffer.size());
    if (static_cast<int>(arrivals.size()) != n) throw ValidationError("arrival vector length");
    int remaining = bu_max - std::accumulate(buffer.begin(), buffer.end(), 0);
    int pending = std::accumulate(arrivals.begin(), arrivals.end(), 0);
    const int total = pending;
    int admitted = 0;
    for (int i = 0; remaining > 0 && pending > 0; i = (i + 1) % n) {
        if (arrivals[i] > 0) {
            ++buffer[i];
            --arrivals[i];
            --remaining;
            --pending;
            ++admitted;
        }
    }
    return {std::move(buffer), total - admitted};
}

double throughput_reward(int action, const WirelessState& state) {
    return transmit_vector(action, state)[action];
}

WirelessLayout::WirelessLayout(const WirelessConfig& config)
    : n_users_(config.n_users), channel_support_(config.channel_support),
      buffers_(buffer_states(config.n_users, config.buffer_max)) {
    std::vector<int> radices;
    std::int64_t count = 1;
    for (const auto& sup : channel_support_) {
        radices.push_back(static_cast<int>(sup.size()));
        count *= static_cast<std::int64_t>(sup.size());
    }
    count *= static_cast<std::int64_t>(buffers_.size());
    if (count > config.state_cap) {
        std::ostringstream msg;
        msg << "wireless model has " << count << " states, above the cap of " << config.state_cap;
        throw BudgetError(msg.str());
    }
    radices.push_back(static_cast<int>(buffers_.size()));
    indexer_ = StateIndexer(std::move(radices));
}

WirelessState WirelessLayout::state(int index) const {
    auto local = indexer_.decode(index);
    WirelessState s;
    for (int u = 0; u < n_users_; ++u) s.channel.push_back(channel_support_[u][local[u]]);
    s.buffer = buffers_[local[n_users_]];
    return s;
}

int WirelessLayout::index(const WirelessState& s) const {
    std::vector<int> local(n_users_ + 1);
    for (int u = 0; u < n_users_; ++u) {
        const auto& sup = channel_support_[u];
        auto it = std::lower_bound(sup.begin(), sup.end(), s.channel[u]);
        if (it == sup.end() || *it != s.channel[u]) throw ValidationError("channel value not in support");
        local[u] = static_cast<int>(it - sup.begin());
    }
    auto it = std::lower_bound(buffers_.begin(), buffers_.end(), s.buffer);
    if (it == buffers_.end() || *it != s.buffer) throw ValidationError("buffer state out of range");
    local[n_users_] = static_cast<int>(it - buffers_.begin());
    return indexer_.index(local);
}

namespace {

std::string tuple_label(const std::vector<int>& v) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ')';
    return os.str();
}

// Distribution of next buffer and dropped count given the post-transmission buffer.
struct BufferOutcome {
    int buffer_index;
    double prob;
    int dropped;
};

std::vector<BufferOutcome> arrival_outcomes(const WirelessConfig& c, const WirelessLayout& layout,
                                            const std::vector<int>& after_tx) {
    const int n = c.n_users;
    const int k = static_cast<int>(c.arrival_support.size());
    std::map<std::pair<int, int>, double> acc;
    std::vector<int> pick(n, 0);
    while (true) {
        double p = 1.0;
        std::vector<int> x(n);
        for (int u = 0; u < n; ++u) {
            p *= c.arrival_probs(pick[u]);
            x[u] = c.arrival_support[pick[u]];
        }
        if (p > 0.0) {
            DropResult d = drop_packets(after_tx, x, c.buffer_max);
            auto it = std::lower_bound(layout.buffers().begin(), layout.buffers().end(), d.buffer);
            acc[{static_cast<int>(it - layout.buffers().begin()), d.dropped}] += p;
        }
        int u = n - 1;
        while (u >= 0 && pick[u] == k - 1) pick[u--] = 0;
        if (u < 0) break;
        ++pick[u];
    }
    std::vector<BufferOutcome> out;
    for (const auto& [key, p] : acc) out.push_back({key.first, p, key.second});
    return out;
}

} // namespace

FactoredMdp build_mdp(const WirelessConfig& config) {
    config.validate();
    WirelessLayout layout(config);
    const int n = config.n_users;
    const int S = layout.num_states();
    const auto& ix = layout.indexer();

    std::vector<LocalStateSpace> locals;
    for (int u = 0; u < n; ++u) {
        LocalStateSpace l{"ch" + std::to_string(u + 1), {}};
        for (int v : config.channel_support[u]) l.symbols.push_back(std::to_string(v));
        locals.push_back(std::move(l));
    }
    LocalStateSpace buf{"buffer", {}};
    for (const auto& b : layout.buffers()) buf.symbols.push_back(tuple_label(b));
    locals.push_back(std::move(buf));

    std::vector<std::string> actions;
    for (int u = 0; u < n; ++u) actions.push_back("user" + std::to_string(u + 1));

    std::vector<Matrix> kernel(n, Matrix::Zero(S, S));
    std::vector<Matrix> reward(n, Matrix::Zero(S, S));
    Matrix throughput = Matrix::Zero(S, n);
    Matrix drops = Matrix::Zero(S, n);

    // Joint next-channel distribution depends only on the current channel digits.
    const int channel_states = S / static_cast<int>(layout.buffers().size());
    auto channel_prob = [&](int from, int to) {
        double p = 1.0;
        for (int u = 0; u < n; ++u)
            p *= config.channel_transition[u](ix.digit(from, u), ix.digit(to, u));
        return p;
    };
    const int buf_node = layout.buffer_node();
    const int buf_stride = 1;  // buffer is the last (least significant) node

    for (int s = 0; s < S; ++s) {
        WirelessState ws = layout.state(s);
        const int chan_base = s - ix.digit(s, buf_node) * buf_stride;
        for (int a = 0; a < n; ++a) {
            std::vector<int> after = ws.buffer;
            int sent = transmit_vector(a, ws)[a];
            after[a] -= sent;
            double r_dropped = 0.0;
            for (const auto& o : arrival_outcomes(config, layout, after)) {
                r_dropped += o.prob * o.dropped;
                for (int c = 0; c < channel_states; ++c) {
                    int next_chan = c * static_cast<int>(layout.buffers().size());
                    double p = channel_prob(chan_base, next_chan);
                    if (p == 0.0) continue;
                    kernel[a](s, next_chan + o.buffer_index) += o.prob * p;
                }
            }
            reward[a].row(s).setConstant(sent - config.drop_penalty * r_dropped);
            throughput(s, a) = sent;
            drops(s, a) = r_dropped;
        }
    }

    Vector initial = Vector::Zero(S);
    WirelessState start;
    for (int u = 0; u < n; ++u)
        start.channel.push_back(
            config.channel_support[u][config.initial_channel.empty() ? 0 : config.initial_channel[u]]);
    start.buffer.assign(n, 0);
    initial(layout.index(start)) = 1.0;

    FactoredMdp mdp(std::move(locals), std::move(actions), std::move(kernel), std::move(reward),
                    config.discount, std::move(initial));
    mdp.set_channel("throughput", std::move(throughput));
    mdp.set_channel("drops", std::move(drops));
    return mdp;
}

std::vector<int> recurrent_class(const WirelessConfig& config, int blind_action) {
    if (blind_action < 0 || blind_action >= config.n_users)
        throw ValidationError("invalid blind action");
    FactoredMdp mdp = build_mdp(config);
    Matrix p = transition_matrix(mdp, ControlMap::constant(mdp.num_states(), blind_action));
    std::vector<int> out;
    for (const auto& c : closed_classes(p)) out.insert(out.end(), c.begin(), c.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> full_buffer_states(const WirelessConfig& config, int blind_action) {
    config.validate();
    WirelessLayout layout(config);
    std::vector<int> out;
    for (int s = 0; s < layout.num_states(); ++s) {
        WirelessState ws = layout.state(s);
        int others = std::accumulate(ws.buffer.begin(), ws.buffer.end(), 0) - ws.buffer[blind_action];
        if (ws.buffer[blind_action] == 0 && others == config.buffer_max) out.push_back(s);
    }
    return out;
}

namespace {

WirelessConfig two_user(std::vector<int> channels, Vector channel_probs, std::vector<int> arrivals,
                        Vector arrival_probs, int bu_max) {
    WirelessConfig c;
    c.n_users = 2;
    c.channel_support = {channels, channels};
    c.channel_transition = {WirelessConfig::iid(channel_probs), WirelessConfig::iid(channel_probs)};
    c.arrival_support = std::move(arrivals);
    c.arrival_probs = std::move(arrival_probs);
    c.buffer_max = bu_max;
    c.discount = 0.9;
    return c;
}

Vector probs(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

} // namespace

WirelessConfig quad_channel_config() {
    return two_user({0, 1, 2, 3}, probs({0.25, 0.25, 0.25, 0.25}), {0, 1, 2},
                    probs({1.0 / 2, 1.0 / 3, 1.0 / 6}), 3);
}

WirelessConfig binary_channel_config() {
    return two_user({0, 1}, probs({0.5, 0.5}), {0, 1}, probs({0.5, 0.5}), 2);
}

WirelessConfig skewed_channel_config() {
    return two_user({0, 1, 2, 3, 4}, probs({1.0 / 8, 2.0 / 8, 3.0 / 8, 1.0 / 8, 1.0 / 8}), {0, 1, 2},
                    probs({1.0 / 2, 1.0 / 3, 1.0 / 6}), 4);
}

} // namespace dmdp

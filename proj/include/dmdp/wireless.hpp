#pragma once

#include <vector>

#include "dmdp/mdp.hpp"

namespace dmdp {

/// Downlink scheduling model: N users with Markov channels, a shared buffer of capacity
/// buffer_max at the basestation, i.i.d. arrivals, one user served per slot.
///
/// Node layout of the generated MDP: nodes 0..N-1 are the user channels, node N is the
/// basestation buffer. Action a schedules user a (0-based).
struct WirelessConfig {
    int n_users = 2;
    std::vector<std::vector<int>> channel_support;  ///< per user, strictly increasing
    std::vector<Matrix> channel_transition;         ///< per user, row-stochastic
    std::vector<int> arrival_support;
    Vector arrival_probs;
    int buffer_max = 0;
    double discount = 0.9;
    /// Initial channel symbol indices; the initial buffer is empty. Defaults to index 0.
    std::vector<int> initial_channel;
    /// Reward is throughput minus drop_penalty times expected drops.
    double drop_penalty = 0.0;
    int state_cap = 2048;

    /// Channel chain with identical rows (i.i.d. over time).
    static Matrix iid(const Vector& probs);
    void validate() const;
};

struct WirelessState {
    std::vector<int> channel;  ///< channel values (not indices)
    std::vector<int> buffer;

    friend bool operator==(const WirelessState&, const WirelessState&) = default;
};

struct DropResult {
    std::vector<int> buffer;
    int dropped = 0;
};

/// Backlog vectors with sum at most bu_max, in lexicographic order.
std::vector<std::vector<int>> buffer_states(int n_users, int bu_max);

/// Packets sent this slot: entry a is min(channel_a, b_a), all others 0.
std::vector<int> transmit_vector(int action, const WirelessState& state);

/// Round-robin single-packet admission starting at user 0 while capacity and arrivals remain.
DropResult drop_packets(std::vector<int> buffer, std::vector<int> arrivals, int bu_max);

double throughput_reward(int action, const WirelessState& state);

/// Maps between global state indices of the generated MDP and wireless states.
class WirelessLayout {
public:
    explicit WirelessLayout(const WirelessConfig& config);

    int num_states() const { return indexer_.size(); }
    int buffer_node() const { return n_users_; }
    const StateIndexer& indexer() const { return indexer_; }
    const std::vector<std::vector<int>>& buffers() const { return buffers_; }
    WirelessState state(int index) const;
    int index(const WirelessState& s) const;

private:
    int n_users_;
    std::vector<std::vector<int>> channel_support_;
    std::vector<std::vector<int>> buffers_;
    StateIndexer indexer_;
};

/// Exact joint kernel. Emits per-(state, action) channels "throughput" and "drops".
FactoredMdp build_mdp(const WirelessConfig& config);

/// States in closed classes of the chain under the constant map phi = blind_action.
std::vector<int> recurrent_class(const WirelessConfig& config, int blind_action);

/// States whose buffer has b_a = 0 and all other users' backlog summing to buffer_max.
std::vector<int> full_buffer_states(const WirelessConfig& config, int blind_action);

/// Two users, channels uniform on {0..3}, arrivals {0,1,2} w.p. {1/2,1/3,1/6}, capacity 3.
WirelessConfig quad_channel_config();
/// Two users, channels and arrivals uniform on {0,1}, capacity 2.
WirelessConfig binary_channel_config();
/// Two users, channels on {0..4} w.p. {1,2,3,1,1}/8, arrivals as quad, capacity 4.
WirelessConfig skewed_channel_config();

} // namespace dmdp

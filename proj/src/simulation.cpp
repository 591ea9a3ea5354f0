#include "dmdp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "dmdp/error.hpp"

namespace dmdp {

namespace {

// Cumulative sparse rows of P(phi), one per state.
struct Sampler {
    std::vector<std::vector<int>> next;
    std::vector<std::vector<double>> cum;

    Sampler(const FactoredMdp& mdp, const ControlMap& phi) {
        const int S = mdp.num_states();
        next.resize(S);
        cum.resize(S);
        for (int s = 0; s < S; ++s) {
            const Matrix& q = mdp.kernel(phi[s]);
            double acc = 0.0;
            for (int j = 0; j < S; ++j) {
                if (q(s, j) <= 0.0) continue;
                acc += q(s, j);
                next[s].push_back(j);
                cum[s].push_back(acc);
            }
        }
    }

    int draw(int s, double u) const {
        const auto& c = cum[s];
        auto it = std::upper_bound(c.begin(), c.end(), u * c.back());
        if (it == c.end()) --it;
        return next[s][it - c.begin()];
    }
};

int draw_initial(const Vector& pi, double u) {
    double acc = 0.0;
    const double total = pi.sum();
    int last = 0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        if (pi(i) <= 0.0) continue;
        last = static_cast<int>(i);
        acc += pi(i);
        if (u * total < acc) return last;
    }
    return last;
}

} // namespace

Estimate summarize(const std::vector<double>& samples) {
    Estimate e;
    const double n = static_cast<double>(samples.size());
    if (samples.empty()) return e;
    for (double x : samples) e.mean += x;
    e.mean /= n;
    if (samples.size() < 2) return e;
    double ss = 0.0;
    for (double x : samples) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
    e.half_width = 1.96 * e.std_error;
    return e;
}

Trajectory rollout(const FactoredMdp& mdp, const ControlMap& phi, const EncoderVec& enc, int horizon,
                   std::mt19937_64& rng) {
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
    if (phi.size() != mdp.num_states()) throw ValidationError("control map has wrong length");
    if (!decodable(mdp.indexer(), phi, enc).ok)
        throw ValidationError("control map is not a function of the messages");

    const int S = mdp.num_states();
    const double beta = mdp.discount();
    Sampler sampler(mdp, phi);
    const Matrix* thr = mdp.channel("throughput");
    const Matrix* drp = mdp.channel("drops");
    const Vector bits = enc.bits_per_state(mdp.indexer());
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double r_max = 0.0;
    for (int a = 0; a < mdp.num_actions(); ++a) r_max = std::max(r_max, mdp.reward(a).cwiseAbs().maxCoeff());

    Trajectory t;
    t.visits.assign(S, 0);
    t.tail_bound = beta < 1.0 ? std::pow(beta, horizon) * r_max / (1.0 - beta) : 0.0;
    const int burn_in = horizon / 5;
    int s = draw_initial(mdp.initial(), unif(rng));
    double disc = 1.0;
    for (int k = 0; k < horizon; ++k) {
        const int a = phi[s];
        const int j = sampler.draw(s, unif(rng));
        const double r = mdp.reward(a)(s, j);
        t.discounted_reward += disc * r;
        disc *= beta;
        if (k >= burn_in) {
            t.reward += r;
            t.throughput += thr ? (*thr)(s, a) : mdp.mean_reward()(s, a);
            t.drops += drp ? (*drp)(s, a) : 0.0;
            t.bits += bits(s);
            ++t.visits[s];
        }
        s = j;
    }
    const double window = static_cast<double>(horizon - burn_in);
    t.reward /= window;
    t.throughput /= window;
    t.drops /= window;
    t.bits /= window;
    return t;
}

std::mt19937_64 episode_rng(std::uint64_t seed, std::uint64_t episode) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32)};
    return std::mt19937_64(seq);
}

RolloutStats estimate(const FactoredMdp& mdp, const ControlMap& phi, const EncoderVec& enc, int episodes,
                      int horizon, std::uint64_t seed) {
    if (episodes < 1) throw ValidationError("episodes must be at least 1");
    std::vector<double> reward, thr, drops, bits;
    RolloutStats st;
    for (int e = 0; e < episodes; ++e) {
        auto rng = episode_rng(seed, static_cast<std::uint64_t>(e));
        Trajectory t = rollout(mdp, phi, enc, horizon, rng);
        reward.push_back(t.discounted_reward);
        thr.push_back(t.throughput);
        drops.push_back(t.drops);
        bits.push_back(t.bits);
        st.tail_bound = t.tail_bound;
    }
    st.episodes = episodes;
    st.horizon = horizon;
    st.seed = seed;
    st.discounted_reward = summarize(reward);
    st.throughput = summarize(thr);
    st.drops = summarize(drops);
    st.bits = summarize(bits);
    return st;
}

std::string stats_csv(const std::vector<StatsRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "# dmdp-simulate v1\n";
    os << "model,phi,enc,seed,episodes,horizon,reward,reward_ci,throughput,throughput_ci,drops,drops_ci,"
          "bits,bits_ci,tail_bound\n";
    for (const auto& r : rows) {
        const auto& s = r.stats;
        os << r.model_id << ',' << r.phi_id << ',' << r.enc_id << ',' << s.seed << ',' << s.episodes << ','
           << s.horizon << ',' << s.discounted_reward.mean << ',' << s.discounted_reward.half_width << ','
           << s.throughput.mean << ',' << s.throughput.half_width << ',' << s.drops.mean << ','
           << s.drops.half_width << ',' << s.bits.mean << ',' << s.bits.half_width << ',' << s.tail_bound
           << '\n';
    }
    return os.str();
}

} // namespace dmdp

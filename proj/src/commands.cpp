#include "dmdp/commands.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "dmdp/error.hpp"
#include "dmdp/interactive.hpp"
#include "dmdp/simulation.hpp"

namespace dmdp {

namespace {

constexpr double kSolveTol = 1e-10;

std::string state_label(const FactoredMdp& mdp, int s) {
    std::string out = "(";
    for (int n = 0; n < mdp.num_nodes(); ++n) {
        if (n) out += ",";
        out += mdp.locals()[n].symbols[mdp.indexer().digit(s, n)];
    }
    return out + ")";
}

const char* kind_name(ModelSpec::Kind k) {
    switch (k) {
    case ModelSpec::Kind::wireless: return "wireless";
    case ModelSpec::Kind::mdp: return "mdp";
    case ModelSpec::Kind::argmax: return "argmax";
    }
    return "?";
}

struct Solved {
    ValueFunction value;
    CandidateSet candidates;
    ControlMap reference;
};

Solved solve(const FactoredMdp& mdp, const RunParams& run) {
    Solved s;
    s.value = value_iteration(mdp, kSolveTol);
    s.candidates = candidate_control_set(mdp, s.value);
    s.reference = extract_policy(mdp, s.value, run.tie_break);
    return s;
}

std::vector<Vector> reference_marginals(const FactoredMdp& mdp, const ControlMap& phi, Weighting w) {
    return node_marginals(mdp.indexer(), state_weighting(mdp, phi, w));
}

std::string rate_noninteractive(const FactoredMdp& mdp, const RunParams& run) {
    Solved s = solve(mdp, run);
    std::ostringstream os;
    os << std::setprecision(6);
    os << "# dmdp-rate v1 noninteractive\n";
    os << "candidate maps: " << s.candidates.count() << '\n';
    os << "tie break: " << (run.tie_break == TieBreak::lowest ? "lowest" : "highest") << '\n';
    RateResult primary;
    for (Weighting w : {run.weighting, run.weighting == Weighting::stationary ? Weighting::occupancy
                                                                              : Weighting::stationary}) {
        RateOptions opt;
        opt.weighting = w;
        opt.objective = run.length;
        opt.budget = run.budget;
        opt.reference = s.reference;
        RateResult r = noninteractive_min_rate(mdp, s.candidates, opt);
        auto marg = reference_marginals(mdp, s.reference, w);
        EncoderVec ref = mis_encoder(mdp.indexer(), s.reference, marg, positive_supports(marg), run.length);
        os << "weighting " << to_string(w) << ": min entropy rate " << r.entropy_rate << " bits, huffman rate "
           << r.huffman_rate << " bits" << (r.approximate ? " (approximate)" : "") << "; tie-break map: entropy "
           << ref.entropy_rate() << ", huffman " << ref.huffman_rate() << '\n';
        if (w == run.weighting) primary = std::move(r);
    }
    os << "objective: " << to_string(run.length) << '\n';
    os << "partitions (" << to_string(primary.weighting) << "):\n";
    for (int n = 0; n < mdp.num_nodes(); ++n) {
        const auto& l = mdp.locals()[n];
        os << "  " << l.name << ":";
        for (const auto& block : primary.partitions[n]) {
            os << " {";
            for (std::size_t k = 0; k < block.size(); ++k) os << (k ? "," : "") << l.symbols[block[k]];
            os << "}";
        }
        os << '\n';
    }
    os << dump_encoder(mdp, primary.encoder);
    return os.str();
}

std::string rate_interactive(const FactoredMdp& mdp, const RunParams& run, bool scalar) {
    Solved s = solve(mdp, run);
    auto marg = reference_marginals(mdp, s.reference, run.weighting);
    std::ostringstream os;
    os << std::setprecision(6);
    if (!scalar) {
        BoundOptions opt;
        opt.resolution = run.grid_res;
        BoundResult b = interactive_rate_bound(mdp.indexer(), s.candidates, marg, run.rounds, opt);
        os << "# dmdp-rate v1 interactive\n";
        os << "rounds: " << run.rounds << "\nresolution: " << b.resolution << '\n';
        os << "rate: " << b.rate << " bits" << (b.approximate ? " (grid approximation)" : "") << '\n';
        for (std::size_t r = 0; r < b.by_round.size(); ++r) os << "after " << r << " rounds: " << b.by_round[r] << '\n';
    } else {
        ProtocolOptions opt;
        opt.mode = run.protocol_mode;
        opt.length = run.length;
        opt.budget = run.budget;
        ProtocolResult p = optimal_scalar_protocol(mdp.indexer(), s.candidates, marg, run.rounds, opt);
        os << "# dmdp-rate v1 scalar-protocol\n";
        os << "rounds: " << run.rounds << "\nmode: " << to_string(run.protocol_mode) << '\n';
        os << "rate: " << p.rate << " bits\n";
        if (std::isfinite(p.rate)) os << dump_protocol(p.protocol);
    }
    os << "weighting: " << to_string(run.weighting) << '\n';
    return os.str();
}

} // namespace

std::string cmd_solve(const ModelSpec& spec) {
    FactoredMdp mdp = spec.build();
    ValueFunction vi = value_iteration(mdp, kSolveTol);
    PolicyIterationResult pi = policy_iteration(mdp);
    CandidateSet cand = candidate_control_set(mdp, pi.value);
    ControlMap phi = extract_policy(mdp, pi.value, spec.run.tie_break);
    std::ostringstream os;
    os << std::setprecision(6);
    os << "# dmdp-solve v1\n";
    os << "states: " << mdp.num_states() << "\nactions: " << mdp.num_actions() << "\ndiscount: " << mdp.discount()
       << '\n';
    os << "value_iteration: " << mdp.initial().dot(vi.values) << " (" << vi.iterations << " iterations)\n";
    os << "policy_iteration: " << mdp.initial().dot(pi.value.values) << " (" << pi.iterations << " iterations)\n";
    os << "candidate maps: " << cand.count() << '\n';
    os << "# state value action candidates\n";
    for (int s = 0; s < mdp.num_states(); ++s) {
        os << state_label(mdp, s) << ' ' << pi.value.values(s) << ' ' << mdp.actions()[phi[s]] << ' ';
        bool first = true;
        for (int a = 0; a < mdp.num_actions(); ++a) {
            if (!(cand.allowed[s] >> a & 1ULL)) continue;
            os << (first ? "" : "|") << mdp.actions()[a];
            first = false;
        }
        os << '\n';
    }
    return os.str();
}

std::string cmd_rate(const ModelSpec& spec) {
    FactoredMdp mdp = spec.build();
    const std::string& mode = spec.run.rate_mode;
    if (mode == "noninteractive") return rate_noninteractive(mdp, spec.run);
    if (mode == "interactive") return rate_interactive(mdp, spec.run, false);
    if (mode == "scalar-protocol") return rate_interactive(mdp, spec.run, true);
    throw ValidationError("unknown rate mode '" + mode + "'");
}

std::string cmd_tradeoff(const ModelSpec& spec) {
    FactoredMdp mdp = spec.build();
    SweepOptions opt;
    opt.length = spec.run.length;
    opt.budget = spec.run.budget;
    opt.max_iters = spec.run.max_iters;
    std::vector<TradeoffCurve> curves;
    for (Method m : spec.run.methods) curves.push_back(tradeoff_sweep(mdp, spec.run.lambda_grid, m, opt));
    return tradeoff_csv(curves);
}

std::string cmd_simulate(const ModelSpec& spec) {
    FactoredMdp mdp = spec.build();
    Solved s = solve(mdp, spec.run);
    auto marg = reference_marginals(mdp, s.reference, spec.run.weighting);
    EncoderVec enc = mis_encoder(mdp.indexer(), s.reference, marg, full_supports(mdp.indexer()), spec.run.length);
    StatsRow row;
    row.model_id = kind_name(spec.kind);
    row.phi_id = spec.run.tie_break == TieBreak::lowest ? "optimal-lowest" : "optimal-highest";
    row.enc_id = std::string("mis-") + to_string(spec.run.length);
    row.stats = estimate(mdp, s.reference, enc, spec.run.episodes, spec.run.horizon, spec.run.seed);
    return stats_csv({row});
}

} // namespace dmdp

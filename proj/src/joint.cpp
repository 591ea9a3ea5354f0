#include "dmdp/joint.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "dmdp/error.hpp"
#include "dmdp/markov_chain.hpp"
#include "dmdp/policy_evaluator.hpp"

namespace dmdp {

namespace {

constexpr double kAccept = 1e-12;

bool improves(double candidate, double current) {
    return candidate > current + kAccept * std::max(1.0, std::abs(current));
}

Vector normalized_occupancy(const FactoredMdp& mdp, const ControlMap& phi) {
    return discounted_occupancy(mdp, phi, true).weights;
}

double per_slot(const FactoredMdp& mdp, const ControlMap& phi, const Vector& weights,
                const char* channel) {
    const Matrix* ch = mdp.channel(channel);
    double total = 0.0;
    for (int s = 0; s < mdp.num_states(); ++s) {
        double v = ch ? (*ch)(s, phi[s]) : (std::string(channel) == "throughput" ? mdp.mean_reward()(s, phi[s]) : 0.0);
        total += weights(s) * v;
    }
    return total;
}

// Reflected mixed-radix Gray code: step(j, v) after each single-digit change, starting
// from the all-zero configuration (which the caller visits first).
template <class Step>
void reflected_gray(int count, int radix, Step step) {
    std::vector<int> value(count, 0), dir(count, 1);
    while (true) {
        int j = 0;
        for (; j < count; ++j) {
            int next = value[j] + dir[j];
            if (next >= 0 && next < radix) {
                value[j] = next;
                step(j, next);
                break;
            }
            dir[j] = -dir[j];
        }
        if (j == count) return;
    }
}

// Rate of the MIS encoder of phi without materializing codes.
class FastQuantizer {
public:
    explicit FastQuantizer(const StateIndexer& ix) : ix_(ix) {
        for (int n = 0; n < ix.nodes(); ++n) {
            std::vector<int> contexts;
            for (int s = 0; s < ix.size(); ++s)
                if (ix.digit(s, n) == 0) contexts.push_back(s);
            std::vector<int> t;
            for (int x = 0; x < ix.radix(n); ++x)
                for (int c : contexts) t.push_back(ix.with_digit(c, n, x));
            table_.push_back(std::move(t));
            width_.push_back(static_cast<int>(contexts.size()));
        }
    }

    double bits_per_slot(const ControlMap& phi, const Vector& w, LengthModel length) {
        double total = 0.0;
        for (int n = 0; n < ix_.nodes(); ++n) {
            const int k = ix_.radix(n);
            const int c = width_[n];
            const int* t = table_[n].data();
            reps_.clear();
            masses_.clear();
            for (int x = 0; x < k; ++x) {
                double mass = 0.0;
                for (int j = 0; j < c; ++j) mass += w(t[x * c + j]);
                std::size_t cls = 0;
                for (; cls < reps_.size(); ++cls) {
                    const int r = reps_[cls];
                    bool same = true;
                    for (int j = 0; j < c && same; ++j) same = phi[t[x * c + j]] == phi[t[r * c + j]];
                    if (same) break;
                }
                if (cls == reps_.size()) {
                    reps_.push_back(x);
                    masses_.push_back(0.0);
                }
                masses_[cls] += mass;
            }
            if (length == LengthModel::huffman) {
                total += huffman_expected_length(masses_);
            } else {
                for (double p : masses_) total += entropy_term(p);
            }
        }
        return total;
    }

private:
    const StateIndexer& ix_;
    std::vector<std::vector<int>> table_;
    std::vector<int> width_;
    std::vector<int> reps_;
    std::vector<double> masses_;
};

} // namespace

AugmentedModel::AugmentedModel(const FactoredMdp& m, double lam, LengthModel len)
    : mdp(&m), lambda(lam), length(len) {
    if (!(lam >= 0.0) || !std::isfinite(lam)) throw ValidationError("lambda must be finite and nonnegative");
}

Vector control_cost(const AugmentedModel& model, const EncoderVec& enc) {
    return model.lambda * enc.bits_per_state(model.mdp->indexer());
}

double augmented_expected_reward(const AugmentedModel& model, const ControlMap& phi,
                                 const EncoderVec& enc) {
    if (!decodable(model.mdp->indexer(), phi, enc).ok)
        throw ValidationError("control map is not a function of the messages");
    return expected_discounted_reward(*model.mdp, phi, control_cost(model, enc));
}

EncoderVec quantizer_update(const AugmentedModel& model, const ControlMap& phi) {
    const auto& ix = model.mdp->indexer();
    auto marg = node_marginals(ix, normalized_occupancy(*model.mdp, phi));
    return mis_encoder(ix, phi, marg, full_supports(ix), model.length);
}

EncoderVec identity_encoders(const AugmentedModel& model, const ControlMap& phi) {
    const auto& ix = model.mdp->indexer();
    return identity_encoder(ix, node_marginals(ix, normalized_occupancy(*model.mdp, phi)), model.length);
}

std::vector<std::vector<int>> message_fibers(const StateIndexer& ix, const EncoderVec& enc) {
    std::map<int, std::vector<int>> by_message;
    auto msg = enc.message_of_states(ix);
    for (int s = 0; s < ix.size(); ++s) by_message[msg[s]].push_back(s);
    std::vector<std::vector<int>> out;
    for (auto& [m, states] : by_message) out.push_back(std::move(states));
    return out;
}

bool fiber_constant(const StateIndexer& ix, const ControlMap& phi, const EncoderVec& enc) {
    for (const auto& f : message_fibers(ix, enc))
        for (int s : f)
            if (phi[s] != phi[f.front()]) return false;
    return true;
}

const char* to_string(UpdateOrder o) { return o == UpdateOrder::round_robin ? "round_robin" : "greedy"; }

ControlUpdate coordinate_control_update(const AugmentedModel& model, const EncoderVec& enc,
                                        const ControlMap& start, UpdateOrder order) {
    const auto& mdp = *model.mdp;
    if (!fiber_constant(mdp.indexer(), start, enc))
        throw ValidationError("starting map is not constant on message fibers");
    auto fibers = message_fibers(mdp.indexer(), enc);
    PolicyEvaluator ev(mdp, start, control_cost(model, enc));
    ControlUpdate out;
    out.trace.push_back(ev.objective());
    const int A = mdp.num_actions();

    if (order == UpdateOrder::round_robin) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& f : fibers) {
                const int current = ev.policy()[f.front()];
                double best = ev.objective();
                int best_a = -1;
                for (int a = 0; a < A; ++a) {
                    if (a == current) continue;
                    double v = ev.score(f, a);
                    if (improves(v, best)) {
                        best = v;
                        best_a = a;
                    }
                }
                if (best_a < 0) continue;
                ev.apply(f, best_a);
                out.trace.push_back(ev.objective());
                ++out.changes;
                changed = true;
            }
        }
    } else {
        while (true) {
            double best = ev.objective();
            int best_f = -1, best_a = -1;
            for (std::size_t fi = 0; fi < fibers.size(); ++fi) {
                const int current = ev.policy()[fibers[fi].front()];
                for (int a = 0; a < A; ++a) {
                    if (a == current) continue;
                    double v = ev.score(fibers[fi], a);
                    if (improves(v, best)) {
                        best = v;
                        best_f = static_cast<int>(fi);
                        best_a = a;
                    }
                }
            }
            if (best_f < 0) break;
            ev.apply(fibers[best_f], best_a);
            out.trace.push_back(ev.objective());
            ++out.changes;
        }
    }
    out.phi = ev.policy();
    return out;
}

ControlMap control_update(const AugmentedModel& model, const EncoderVec& enc, double budget) {
    const auto& mdp = *model.mdp;
    auto fibers = message_fibers(mdp.indexer(), enc);
    const ControlMap blind = ControlMap::constant(mdp.num_states(), 0);
    const double maps = std::pow(static_cast<double>(mdp.num_actions()), static_cast<double>(fibers.size()));
    if (maps > budget)
        return coordinate_control_update(model, enc, blind, UpdateOrder::round_robin).phi;
    PolicyEvaluator ev(mdp, blind, control_cost(model, enc));
    ev.set_refactor_interval(1024);
    ControlMap best = blind;
    double best_v = ev.objective();
    reflected_gray(static_cast<int>(fibers.size()), mdp.num_actions(), [&](int j, int a) {
        ev.apply(fibers[j], a);
        if (improves(ev.objective(), best_v)) {
            best_v = ev.objective();
            best = ev.policy();
        }
    });
    return best;
}

JointSolution evaluate_solution(const AugmentedModel& model, ControlMap phi, EncoderVec enc) {
    const auto& mdp = *model.mdp;
    JointSolution sol;
    sol.reward = augmented_expected_reward(model, phi, enc);
    Vector w = normalized_occupancy(mdp, phi);
    Vector bits = enc.bits_per_state(mdp.indexer());
    sol.throughput = per_slot(mdp, phi, w, "throughput");
    sol.drops = per_slot(mdp, phi, w, "drops");
    sol.bits = w.dot(bits);
    Vector st = stationary_distribution(mdp, phi);
    sol.long_run_throughput = per_slot(mdp, phi, st, "throughput");
    sol.long_run_bits = st.dot(bits);
    sol.phi = std::move(phi);
    sol.enc = std::move(enc);
    return sol;
}

JointSolution alternate_optimize(const AugmentedModel& model, UpdateOrder order, int max_iters) {
    if (max_iters < 1) throw ValidationError("max_iters must be positive");
    ControlMap phi = ControlMap::constant(model.mdp->num_states(), 0);
    EncoderVec enc = identity_encoders(model, phi);
    std::vector<double> trace{augmented_expected_reward(model, phi, enc)};
    bool converged = false;
    int it = 0;
    while (it < max_iters) {
        ++it;
        ControlUpdate cu = coordinate_control_update(model, enc, phi, order);
        trace.insert(trace.end(), cu.trace.begin() + 1, cu.trace.end());
        EncoderVec next = quantizer_update(model, cu.phi);
        trace.push_back(augmented_expected_reward(model, cu.phi, next));
        const bool same = cu.phi == phi && next == enc;
        phi = std::move(cu.phi);
        enc = std::move(next);
        if (same) {
            converged = true;
            break;
        }
    }
    JointSolution sol = evaluate_solution(model, std::move(phi), std::move(enc));
    sol.trace = std::move(trace);
    sol.converged = converged;
    sol.iterations = it;
    return sol;
}

NashReport nash_check(const AugmentedModel& model, const JointSolution& sol, double tol) {
    const auto& mdp = *model.mdp;
    NashReport r;
    if (!decodable(mdp.indexer(), sol.phi, sol.enc).ok) {
        r.ok = false;
        r.violations.push_back({-2, -1, std::numeric_limits<double>::infinity()});
        return r;
    }
    auto fibers = message_fibers(mdp.indexer(), sol.enc);
    PolicyEvaluator ev(mdp, sol.phi, control_cost(model, sol.enc));
    const double base = ev.objective();
    const double slack = tol * std::max(1.0, std::abs(base));
    for (std::size_t fi = 0; fi < fibers.size(); ++fi) {
        const int current = sol.phi[fibers[fi].front()];
        for (int a = 0; a < mdp.num_actions(); ++a) {
            if (a == current) continue;
            double gain = ev.score(fibers[fi], a) - base;
            if (gain > slack) r.violations.push_back({static_cast<int>(fi), a, gain});
        }
    }
    EncoderVec best = quantizer_update(model, sol.phi);
    double gain = augmented_expected_reward(model, sol.phi, best) - base;
    if (gain > slack) r.violations.push_back({-1, -1, gain});
    r.ok = r.violations.empty();
    return r;
}

std::vector<JointSolution> exhaustive_sweep(const FactoredMdp& mdp, const std::vector<double>& lambdas,
                                            LengthModel length, double budget) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    const double maps = std::pow(static_cast<double>(A), static_cast<double>(S));
    if (maps > budget) {
        std::ostringstream msg;
        msg << "exhaustive search over " << maps << " control maps exceeds the budget of " << budget
            << "; use the round_robin or greedy method";
        throw BudgetError(msg.str());
    }
    for (double l : lambdas)
        if (!(l >= 0.0)) throw ValidationError("lambda must be nonnegative");
    const double beta = mdp.discount();
    PolicyEvaluator ev(mdp, ControlMap::constant(S, 0));
    ev.set_refactor_interval(4096);
    FastQuantizer fq(mdp.indexer());

    struct Best {
        double value = -std::numeric_limits<double>::infinity();
        double bits = std::numeric_limits<double>::infinity();
        ControlMap phi;
    };
    std::vector<Best> best(lambdas.size());
    auto visit = [&] {
        const double reward = ev.objective();
        const double b = fq.bits_per_slot(ev.policy(), ev.occupancy() * (1.0 - beta), length);
        for (std::size_t j = 0; j < lambdas.size(); ++j) {
            const double v = reward - lambdas[j] * b / (1.0 - beta);
            const double tol = 1e-9 * std::max(1.0, std::abs(v));
            Best& cur = best[j];
            if (v > cur.value + tol || (v >= cur.value - tol && b < cur.bits - 1e-12)) {
                cur.value = v;
                cur.bits = b;
                cur.phi = ev.policy();
            }
        }
    };
    visit();
    reflected_gray(S, A, [&](int s, int a) {
        ev.apply(std::span<const int>(&s, 1), a);
        visit();
    });

    std::vector<JointSolution> out;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        AugmentedModel model(mdp, lambdas[j], length);
        JointSolution sol = evaluate_solution(model, best[j].phi, quantizer_update(model, best[j].phi));
        sol.trace = {sol.reward};
        out.push_back(std::move(sol));
    }
    return out;
}

JointSolution exhaustive_joint_search(const AugmentedModel& model, double budget) {
    return exhaustive_sweep(*model.mdp, {model.lambda}, model.length, budget).front();
}

const char* to_string(Method m) {
    switch (m) {
    case Method::exhaustive: return "exhaustive";
    case Method::round_robin: return "round_robin";
    case Method::greedy: return "greedy";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "exhaustive") return Method::exhaustive;
    if (s == "round_robin" || s == "rr") return Method::round_robin;
    if (s == "greedy") return Method::greedy;
    throw ValidationError("unknown method '" + s + "'");
}

TradeoffCurve tradeoff_sweep(const FactoredMdp& mdp, const std::vector<double>& lambdas, Method method,
                             const SweepOptions& options) {
    TradeoffCurve curve;
    {
        AugmentedModel model(mdp, 0.0, options.length);
        int best_a = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            double v = expected_discounted_reward(mdp, ControlMap::constant(mdp.num_states(), a));
            if (v > best_v) {
                best_v = v;
                best_a = a;
            }
        }
        ControlMap phi = ControlMap::constant(mdp.num_states(), best_a);
        curve.blind.method = "blind";
        curve.blind.lambda = std::numeric_limits<double>::quiet_NaN();
        curve.blind.solution = evaluate_solution(model, phi, quantizer_update(model, phi));
        curve.blind.nash_ok = true;
        curve.blind.negative = curve.blind.solution.reward < 0.0;
    }

    std::vector<JointSolution> exhaustive;
    std::string exhaustive_error;
    if (method == Method::exhaustive) {
        try {
            exhaustive = exhaustive_sweep(mdp, lambdas, options.length, options.budget);
        } catch (const Error& e) {
            exhaustive_error = e.what();
        }
    }
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        TradeoffPoint p;
        p.lambda = lambdas[j];
        p.method = to_string(method);
        try {
            AugmentedModel model(mdp, lambdas[j], options.length);
            if (method == Method::exhaustive) {
                if (!exhaustive_error.empty()) throw BudgetError(exhaustive_error);
                p.solution = exhaustive[j];
            } else {
                p.solution = alternate_optimize(
                    model, method == Method::greedy ? UpdateOrder::greedy : UpdateOrder::round_robin,
                    options.max_iters);
            }
            p.nash_ok = nash_check(model, p.solution).ok;
            p.negative = p.solution.reward < 0.0;
        } catch (const Error& e) {
            p.error = e.what();
        }
        curve.points.push_back(std::move(p));
    }
    return curve;
}

std::string tradeoff_csv(const std::vector<TradeoffCurve>& curves) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "# dmdp-tradeoff v1\n";
    os << "lambda,method,reward,throughput,drops,bits,converged,nash_ok,long_run_throughput\n";
    auto row = [&](const TradeoffPoint& p) {
        if (std::isnan(p.lambda)) os << "any";
        else os << p.lambda;
        os << ',' << p.method << ',';
        if (!p.error.empty()) {
            os << "error,,,,,," << '\n';
            return;
        }
        const auto& s = p.solution;
        os << s.reward << ',' << s.throughput << ',' << s.drops << ',' << s.bits << ','
           << (s.converged ? 1 : 0) << ',' << (p.nash_ok ? 1 : 0) << ',' << s.long_run_throughput << '\n';
    };
    for (const auto& c : curves) {
        for (const auto& p : c.points) row(p);
    }
    if (!curves.empty()) row(curves.front().blind);
    return os.str();
}

} // namespace dmdp

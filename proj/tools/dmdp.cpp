#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dmdp/commands.hpp"
#include "dmdp/error.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> lambda_grid;
    std::optional<std::string> methods;
    std::optional<std::string> length_model;
    std::optional<int> grid_res;
    std::optional<double> budget;
    std::optional<std::string> mode;
    std::optional<int> rounds;
    std::optional<std::string> protocol_mode;
    std::optional<std::string> weighting;
    std::optional<std::string> tie_break;
    std::optional<int> episodes;
    std::optional<int> horizon;
    std::optional<int> max_iters;
};

void apply(const Overrides& o, dmdp::RunParams& run) {
    using namespace dmdp;
    if (o.seed) run.seed = *o.seed;
    if (o.lambda_grid) run.lambda_grid = parse_grid(*o.lambda_grid);
    if (o.methods) {
        run.methods.clear();
        std::string s = *o.methods;
        for (char& c : s)
            if (c == ',') c = ' ';
        std::istringstream in(s);
        for (std::string m; in >> m;) run.methods.push_back(method_from_string(m));
        if (run.methods.empty()) throw ValidationError("--method needs a value");
    }
    if (o.length_model) run.length = length_model_from_string(*o.length_model);
    if (o.grid_res) run.grid_res = *o.grid_res;
    if (o.budget) run.budget = *o.budget;
    if (o.mode) {
        if (*o.mode != "noninteractive" && *o.mode != "interactive" && *o.mode != "scalar-protocol")
            throw ValidationError("--mode must be noninteractive, interactive or scalar-protocol");
        run.rate_mode = *o.mode;
    }
    if (o.rounds) run.rounds = *o.rounds;
    if (o.protocol_mode) run.protocol_mode = protocol_mode_from_string(*o.protocol_mode);
    if (o.weighting) run.weighting = weighting_from_string(*o.weighting);
    if (o.tie_break) {
        if (*o.tie_break == "lowest") run.tie_break = TieBreak::lowest;
        else if (*o.tie_break == "highest") run.tie_break = TieBreak::highest;
        else throw ValidationError("--tie-break must be lowest or highest");
    }
    if (o.episodes) run.episodes = *o.episodes;
    if (o.horizon) run.horizon = *o.horizon;
    if (o.max_iters) run.max_iters = *o.max_iters;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed MDP control, message rates and controller/quantizer co-design"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_path;
    Overrides o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--spec", spec_path, "Model-spec file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_path, "Write output here instead of stdout");
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--lambda-grid", o.lambda_grid, "Lambda values, e.g. \"0 0.5 1\" or 0:0.02:0.36");
        sub->add_option("--method", o.methods, "exhaustive, round_robin, greedy (comma separated)");
        sub->add_option("--length-model", o.length_model, "huffman or entropy");
        sub->add_option("--grid-res", o.grid_res, "Simplex grid resolution (0 = default)");
        sub->add_option("--budget", o.budget, "Enumeration budget");
        sub->add_option("--rounds", o.rounds, "Interactive rounds M");
        sub->add_option("--protocol-mode", o.protocol_mode, "heterogeneous or homogeneous");
        sub->add_option("--weighting", o.weighting, "stationary or occupancy");
        sub->add_option("--tie-break", o.tie_break, "lowest or highest");
        sub->add_option("--episodes", o.episodes, "Monte Carlo episodes");
        sub->add_option("--horizon", o.horizon, "Slots per episode");
        sub->add_option("--max-iters", o.max_iters, "Alternating optimization cycles");
    };

    auto* solve = app.add_subcommand("solve", "Optimal value, policy table and candidate count");
    auto* rate = app.add_subcommand("rate", "Minimum control-message rate");
    auto* tradeoff = app.add_subcommand("tradeoff", "Reward versus control bits over a lambda grid (CSV)");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo statistics of the optimal scheme (CSV)");
    for (auto* sub : {solve, rate, tradeoff, simulate}) add_common(sub);
    rate->add_option("--mode", o.mode, "noninteractive, interactive or scalar-protocol");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(dmdp::Error::Category::validation);
    }

    try {
        dmdp::ModelSpec spec = dmdp::load_model_spec(spec_path);
        apply(o, spec.run);
        std::string output;
        if (solve->parsed()) output = dmdp::cmd_solve(spec);
        else if (rate->parsed()) output = dmdp::cmd_rate(spec);
        else if (tradeoff->parsed()) output = dmdp::cmd_tradeoff(spec);
        else output = dmdp::cmd_simulate(spec);
        if (out_path.empty()) {
            std::cout << output;
        } else {
            std::ofstream out(out_path);
            if (!out) throw dmdp::ValidationError("cannot write '" + out_path + "'");
            out << output;
        }
    } catch (const dmdp::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include <doctest.h>

#include "dmdp/error.hpp"
#include "dmdp/model_spec.hpp"
#include "support.hpp"

using namespace dmdp;

namespace {

const char* kWireless = R"(# comment line
[wireless]
users = 2
channel_support = 0 1 2 3
channel_probs = 1/4 1/4 1/4 1/4   # trailing comment
arrival_support = 0 1 2
arrival_probs = 1/2 1/3 1/6
buffer_max = 3
discount = 9/10

[run]
lambda_grid = 0:0.5:2 3
method = round_robin greedy
length_model = entropy
seed = 42
)";

std::string error_of(const std::string& text) {
    try {
        parse_model_spec(text, "t.spec");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

ModelSpec random_raw_spec(std::mt19937_64& rng) {
    auto mdp = testing::random_mdp(rng, {2, 3}, 2, 0.75);
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::mdp;
    spec.raw.locals = mdp.locals();
    spec.raw.actions = mdp.actions();
    spec.raw.kernel = {mdp.kernel(0), mdp.kernel(1)};
    spec.raw.reward = {mdp.reward(0), mdp.reward(1)};
    spec.raw.discount = mdp.discount();
    spec.raw.initial = mdp.initial();
    return spec;
}

}  // namespace

TEST_CASE("numbers and grids") {
    CHECK(parse_number("1/3") == doctest::Approx(1.0 / 3));
    CHECK(parse_number(" 0.25 ") == 0.25);
    CHECK(parse_number("-2") == -2.0);
    CHECK_THROWS_AS(parse_number("1/0"), ValidationError);
    CHECK_THROWS_AS(parse_number("abc"), ValidationError);
    auto g = parse_grid("0:0.02:0.36");
    CHECK(g.size() == 19);
    CHECK(g[15] == 0.3);
    CHECK(g.back() == 0.36);
    CHECK(parse_grid("1 2 1/2") == std::vector<double>{1.0, 2.0, 0.5});
    CHECK_THROWS_AS(parse_grid("1:0:2"), ValidationError);
    CHECK_THROWS_AS(parse_grid(""), ValidationError);
}

TEST_CASE("wireless spec matches the built-in generator") {
    auto spec = parse_model_spec(kWireless);
    CHECK(spec.kind == ModelSpec::Kind::wireless);
    CHECK(spec.run.lambda_grid == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0, 3.0});
    CHECK(spec.run.methods == std::vector<Method>{Method::round_robin, Method::greedy});
    CHECK(spec.run.length == LengthModel::entropy);
    CHECK(spec.run.seed == 42);
    auto a = spec.build();
    auto b = build_mdp(quad_channel_config());
    REQUIRE(a.num_states() == b.num_states());
    for (int u = 0; u < 2; ++u) {
        CHECK((a.kernel(u) - b.kernel(u)).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((a.mean_reward() - b.mean_reward()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("round trip preserves every kind") {
    std::mt19937_64 rng(3);
    std::vector<ModelSpec> specs{parse_model_spec(kWireless), random_raw_spec(rng)};
    ModelSpec arg;
    arg.kind = ModelSpec::Kind::argmax;
    arg.argmax_supports = {3, 2, 4};
    arg.run.rate_mode = "scalar-protocol";
    arg.run.protocol_mode = ProtocolMode::homogeneous;
    arg.run.tie_break = TieBreak::highest;
    specs.push_back(arg);
    for (const auto& s : specs) {
        auto text = serialize_model_spec(s);
        auto again = parse_model_spec(text);
        CHECK(again == s);
        CHECK(serialize_model_spec(again) == text);
    }
}

TEST_CASE("raw model spec with reward shorthand") {
    const char* text = R"([mdp]
node x = low high
actions = stay go
discount = 0.9
kernel stay 0 = 1 0
kernel stay 1 = 1/2 1/2
kernel go 0 = 0 1
kernel go 1 = 0 1
state_reward stay = 0 1
state_reward go = 0 1
initial_state = 0
)";
    auto mdp = parse_model_spec(text).build();
    CHECK(mdp.num_states() == 2);
    CHECK(mdp.initial().dot(value_iteration(mdp, 1e-12).values) == doctest::Approx(9.0));
}

TEST_CASE("diagnostics carry line numbers") {
    CHECK(error_of("[mdp]\nnode x = a b\nactions = u\ndiscount = 0.5\nkernel u 0 = 0.5 0.4\nkernel u 1 = 0 1\n")
              .find("t.spec:5:") == 0);
    CHECK(error_of("[wireless]\nusers = 2\nbogus = 1\n").find("t.spec:3: unknown key 'bogus'") == 0);
    CHECK(error_of("[mdp]\nnode x = a b\nactions = u\ndiscount = 0.5\nkernel u 0 = 1 0\n").find("t.spec:1:") == 0);
    CHECK(error_of("users = 2\n").find("t.spec:1: entry outside") == 0);
    CHECK(error_of("[run]\nseed = 1\n").find("exactly one") != std::string::npos);
    CHECK(error_of("[argmax]\nsupports = 2 x\n").find("t.spec:2:") == 0);
    CHECK(error_of("[argmax]\nsupports = 2\n[run]\nmethod = fastest\n").find("t.spec:4:") == 0);
    CHECK(error_of("[wireless]\nusers = 1\nchannel_support = 0 1\nchannel_probs = 1/2 1/2\n"
                   "arrival_support = 0\narrival_probs = 1\nbuffer_max = 1\ndiscount = 1\n")
              .find("t.spec:1:") == 0);
    CHECK(error_of("[nothing]\n").find("unknown section") != std::string::npos);
    CHECK_THROWS_AS(load_model_spec("/nonexistent/file.spec"), ValidationError);
}

#include "oracles.hpp"

#include "miirl/environments.hpp"
#include "miirl/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace miirl;

namespace {

const char* kHeader =
    R"({"type":"header","format":"miirl-demonstrations","version":1,"num_states":3,"num_actions":2})";

ParseError parse_failure(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_demonstrations(in);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("expected a parse error");
    return ParseError("", 0);
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("miirl-io-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("demonstrations round trip") {
    DemoFile f;
    f.num_states = 3;
    f.num_actions = 2;
    f.demos.add({"a", "s1", {{0, 1}, {2, 0}}, 1}, 0.5);
    f.demos.add({"b", "s2", {{1, 1}}, std::nullopt}, 1.0);
    f.labels = {1, 0};
    std::stringstream buf;
    write_demonstrations(buf, f);
    const auto back = parse_demonstrations(buf);
    CHECK(back.num_states == 3);
    CHECK(back.num_actions == 2);
    CHECK(back.demos == f.demos);
    CHECK(back.labels == f.labels);
    CHECK(back.has_labels());
}

TEST_CASE("demonstration records are optional-field tolerant") {
    std::istringstream in(std::string(kHeader) + "\n\n" + R"({"id":"x","steps":[[0,0]]})" + "\n");
    const auto f = parse_demonstrations(in);
    CHECK(f.demos.size() == 1);
    CHECK(f.demos.weights[0] == 1.0);
    CHECK(f.labels[0] == -1);
    CHECK_FALSE(f.has_labels());
}

TEST_CASE("demonstration errors carry line and column") {
    auto e = parse_failure(std::string(kHeader) + "\n" + R"({"id":"x","steps":[[0,0]]})" + "\n" +
                           R"({"id":"y","steps":[[0,)" + "\n");
    CHECK(e.line() == 3);
    CHECK(e.column() > 0);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);

    e = parse_failure(std::string(kHeader) + "\n" + R"({"id":"x","steps":[[3,0]]})");
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("state index 3") != std::string::npos);

    e = parse_failure(std::string(kHeader) + "\n" + R"({"id":"x","steps":[[0,2]]})");
    CHECK(std::string(e.what()).find("action index") != std::string::npos);

    e = parse_failure(R"({"id":"x","steps":[]})");
    CHECK(e.line() == 1);

    e = parse_failure(R"({"type":"header","format":"miirl-demonstrations","version":9,"num_states":3,"num_actions":2})");
    CHECK(std::string(e.what()).find("version") != std::string::npos);

    e = parse_failure(std::string(kHeader) + "\n" + R"({"id":"x","steps":[[0,0]],"weight":-1})");
    CHECK(e.line() == 2);
}

TEST_CASE("empty demonstration file warns") {
    std::istringstream in("");
    const auto f = parse_demonstrations(in);
    CHECK(f.demos.empty());
    REQUIRE(f.warnings.size() == 1);
}

TEST_CASE("environment round trip keeps transitions exactly") {
    Rng rng(31);
    EnvironmentFile env;
    env.kind = "test";
    env.mdp = oracle::random_mdp(4, 3, 0.9, rng);
    env.truth_rewards = {RewardTable{oracle::random_matrix(4, 3, rng)}};
    env.truth_policies = {PolicyTable{oracle::softmax_rows(oracle::random_matrix(4, 3, rng))}};
    env.extra = {{"note", "x"}};
    const auto back = environment_from_json(Json::parse(environment_to_json(env).dump()));
    CHECK(back.kind == "test");
    CHECK(back.mdp.discount() == 0.9);
    CHECK(back.mdp.transitions() == env.mdp.transitions());
    CHECK(back.truth_rewards[0].values == env.truth_rewards[0].values);
    CHECK(back.truth_policies[0].probs == env.truth_policies[0].probs);
    CHECK(back.extra["note"] == "x");

    EnvironmentFile free;
    free.kind = "bandit";
    free.mdp = TabularMDP(16, 2, 0.99);
    const auto fb = environment_from_json(environment_to_json(free));
    CHECK_FALSE(fb.mdp.has_transitions());
}

TEST_CASE("result bundles round trip and require provenance") {
    ResultBundle b;
    b.model.algorithm = Algorithm::lmv_iql;
    b.model.prior = Vector::Constant(2, 0.5);
    b.model.trans = Matrix::Identity(2, 2);
    b.model.rewards = {RewardTable{Matrix::Constant(3, 2, 0.1)}, RewardTable{Matrix::Constant(3, 2, -0.2)}};
    b.model.qs = {QTable{Matrix::Constant(3, 2, 1.0 / 3.0)}, QTable{Matrix::Zero(3, 2)}};
    b.model.posteriors = Matrix::Constant(4, 2, 0.5);
    b.model.train_ll = -12.25;
    b.model.trace.log_likelihood = {-20.0, -12.25};
    b.model.trace.reward_delta = {1.0, 1e-4};
    b.model.trace.posterior_delta = {1.0, 1e-5};
    b.model.trace.iterations = 2;
    b.model.trace.converged = true;
    b.model.restart_seeds = {1, 18446744073709551615ULL};
    b.model.selected_restart = 1;
    b.metrics["train_ll"] = -12.25;
    b.metrics["odd"] = -std::numeric_limits<double>::infinity();
    b.provenance.master_seed = 5;
    b.provenance.seeds = b.model.restart_seeds;
    b.provenance.config = {{"run", {{"k", 2}}}};
    b.provenance.config_hash = config_hash(b.provenance.config);

    const Json j = bundle_to_json(b);
    const auto back = bundle_from_json(Json::parse(j.dump()));
    CHECK(back.model.algorithm == Algorithm::lmv_iql);
    CHECK(back.model.qs[0].values == b.model.qs[0].values);
    CHECK(back.model.trans == b.model.trans);
    CHECK(back.model.trace.log_likelihood == b.model.trace.log_likelihood);
    CHECK(back.model.restart_seeds == b.model.restart_seeds);
    CHECK(std::isinf(back.metrics.at("odd")));
    CHECK(back.provenance.config_hash == b.provenance.config_hash);
    CHECK(bundle_to_json(back).dump() == j.dump());

    Json stripped = j;
    stripped.erase("provenance");
    CHECK_THROWS_AS(bundle_from_json(stripped), ParseError);
    Json wrong = j;
    wrong["version"] = 2;
    CHECK_THROWS_AS(bundle_from_json(wrong), ParseError);
}

TEST_CASE("config hash depends on content only") {
    const Json a = Json::parse(R"({"b":1,"a":[1,2]})");
    const Json b = Json::parse(R"({"a":[1,2],"b":1})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    CHECK(config_hash(a) != config_hash(Json::parse(R"({"a":[2,1],"b":1})")));
}

TEST_CASE("run configuration parsing") {
    const Json j = Json::parse(R"({"algorithm":"lmv-iavi","k":3,"restarts":4,"gamma":0.5,"seed":12,
        "solver":{"policy_smoothing":0.01},"em":{"max_iter":50,"transition_noise":"diagonal"}})");
    const auto cfg = run_config_from_json(j);
    CHECK(cfg.spec.algorithm == Algorithm::lmv_iavi);
    CHECK(cfg.spec.num_intentions == 3);
    CHECK(cfg.spec.restarts == 4);
    CHECK(*cfg.gamma == 0.5);
    CHECK(cfg.seed == 12);
    CHECK(cfg.spec.em.solver_cfg.policy_smoothing == 0.01);
    CHECK(cfg.spec.em.max_iter == 50);
    CHECK(cfg.spec.em.transition_noise == TransitionNoise::diagonal);
    const auto again = run_config_from_json(run_config_to_json(cfg));
    CHECK(run_config_to_json(again) == run_config_to_json(cfg));

    CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"kk":1})")), ParseError);
    CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"em":{"bogus":1}})")), ParseError);
    CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"k":"two"})")), ParseError);
    CHECK(RunConfig{}.spec.restarts == 10);
}

TEST_CASE("bandit trial CSV round trip") {
    BanditSpec spec;
    spec.session_length = 40;
    Rng rng(32);
    const auto agent = BanditAgent::single(reference_bandit_policy(1, std::vector<double>{1.0}));
    const auto trials = simulate_bandit_session(agent, spec, 3, rng);
    std::stringstream buf;
    write_bandit_trials(buf, trials);
    CHECK(parse_bandit_trials(buf) == trials);
    std::istringstream bad("session,trial,choice,correct,block,rewarded_spout,latent\n0,0,7,0,0,0,0\n");
    CHECK_THROWS_AS(parse_bandit_trials(bad), ParseError);
}

TEST_CASE("non-finite reals and CSV helpers") {
    CHECK(real_to_json(1.5) == 1.5);
    CHECK(real_to_json(std::nan("")) == "nan");
    CHECK(std::isinf(real_from_json(Json("-inf"))));
    CHECK_THROWS(real_from_json(Json("x")));
    CHECK(std::stod(format_real(0.1)) == 0.1);
    std::ostringstream out;
    write_csv(out, {"a", "b"}, {{"x,y", "1"}});
    CHECK(out.str() == "a,b\n\"x,y\",1\n");
}

TEST_CASE("file helpers") {
    const auto dir = temp_dir("files");
    write_text_file(dir / "sub" / "f.txt", "hello");
    CHECK(read_text_file(dir / "sub" / "f.txt") == "hello");
    CHECK_THROWS(read_text_file(dir / "missing.txt"));
    CHECK_THROWS(load_demonstrations(dir / "missing.jsonl"));
}

}

#include "miirl/cli.hpp"
#include "miirl/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace miirl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "miirl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("miirl-cli-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path small_maze(const std::string& name) {
    const auto dir = fresh_dir(name);
    const auto r = cli({"generate", "maze", "--depth", "2", "--n-traj", "40", "--len", "5", "--sessions",
                        "4", "--seed", "3", "--out", dir.string()});
    REQUIRE(r.code == 0);
    return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate writes demonstrations and an environment") {
    const auto dir = small_maze("generate");
    CHECK(fs::exists(dir / "demos.jsonl"));
    const auto demos = load_demonstrations(dir / "demos.jsonl");
    CHECK(demos.demos.size() == 40);
    CHECK(demos.has_labels());
    const auto env = load_environment(dir / "env.json");
    CHECK(env.kind == "maze");
    CHECK(env.mdp.num_states() == 7);
    CHECK(env.truth_rewards.size() == 2);

    const auto bandit = fresh_dir("generate-bandit");
    const auto r = cli({"generate", "bandit", "--sessions", "3", "--trials", "50", "--out", bandit.string()});
    CHECK(r.code == 0);
    CHECK(load_bandit_trials(bandit / "raw.csv").size() == 150);
    CHECK(r.err.find("150 steps") != std::string::npos);
}

TEST_CASE("fit, eval and determinism across job counts") {
    const auto dir = small_maze("fit");
    const std::string demos = (dir / "demos.jsonl").string();
    const std::string env = (dir / "env.json").string();
    const auto a = cli({"fit", "--algo", "lmv-iavi", "--k", "2", "--restarts", "3", "--seed", "9", "--in", demos,
                        "--env", env, "--out", (dir / "a.json").string(), "--jobs", "1"});
    REQUIRE(a.code == 0);
    const auto b = cli({"fit", "--algo", "lmv-iavi", "--k", "2", "--restarts", "3", "--seed", "9", "--in", demos,
                        "--env", env, "--out", (dir / "b.json").string(), "--jobs", "3"});
    REQUIRE(b.code == 0);
    CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));

    const auto bundle = load_result_bundle(dir / "a.json");
    CHECK(bundle.metrics.count("bic") == 1);
    CHECK(bundle.metrics.count("cluster_accuracy") == 1);
    CHECK(bundle.provenance.seeds.size() == 3);
    CHECK(bundle.provenance.master_seed == 9);

    const auto e = cli({"eval", "--model", (dir / "a.json").string(), "--in", demos, "--env", env, "--metrics",
                        "ll,bic,evd,accuracy"});
    REQUIRE(e.code == 0);
    CHECK(e.out.rfind("metric,model,intention,matched,value\n", 0) == 0);
    CHECK(e.out.find("ll,random,") != std::string::npos);
    CHECK(e.out.find("evd,lmv-iavi,1,") != std::string::npos);

    const auto csv = dir / "eval.csv";
    CHECK(cli({"eval", "--model", (dir / "a.json").string(), "--in", demos, "--out", csv.string()}).code == 0);
    CHECK(read_text_file(csv).find("ll,lmv-iavi") != std::string::npos);
}

TEST_CASE("config file with flag precedence") {
    const auto dir = small_maze("config");
    write_text_file(dir / "run.json", R"({"algorithm":"lv-iql","k":3,"restarts":2,"seed":4})");
    const auto r = cli({"fit", "--config", (dir / "run.json").string(), "--k", "2", "--in",
                        (dir / "demos.jsonl").string(), "--out", (dir / "m.json").string()});
    REQUIRE(r.code == 0);
    const auto b = load_result_bundle(dir / "m.json");
    CHECK(b.model.num_intentions() == 2);
    CHECK(b.model.algorithm == Algorithm::lv_iql);
    CHECK(b.provenance.seeds.size() == 2);
    CHECK(b.provenance.master_seed == 4);
}

TEST_CASE("sweep over K emits one row per value and fold") {
    const auto dir = small_maze("sweep");
    const auto r = cli({"sweep", "--param", "k", "--values", "1,2", "--folds", "2", "--algo", "lmv-iavi",
                        "--restarts", "1", "--in", (dir / "demos.jsonl").string(), "--env",
                        (dir / "env.json").string()});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 1 + 2 * 2);
}

TEST_CASE("exit codes") {
    const auto dir = small_maze("codes");
    const std::string demos = (dir / "demos.jsonl").string();
    const std::string out = (dir / "m.json").string();

    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"fit", "--algo", "lv-iavi", "--in", demos, "--out", out, "--bogus"}).code == kExitUsage);
    CHECK(cli({"fit", "--algo", "lv-iavi", "--k", "2", "--in", demos, "--out", out}).code == kExitUsage);
    CHECK(cli({"fit", "--algo", "iavi", "--k", "2", "--in", demos, "--out", out,
               "--env", (dir / "env.json").string()}).code == kExitUsage);
    CHECK(cli({"fit", "--in", demos, "--out", out}).code == kExitUsage);
    CHECK(cli({"fit", "--algo", "iql", "--in", (dir / "missing.jsonl").string(), "--out", out}).code ==
          kExitData);

    write_text_file(dir / "bad.jsonl", "{\"type\":\"header\"\n");
    const auto bad = cli({"fit", "--algo", "iql", "--in", (dir / "bad.jsonl").string(), "--out", out});
    CHECK(bad.code == kExitData);
    CHECK(bad.err.find("line 1") != std::string::npos);

    const auto bandit = fresh_dir("codes-bandit");
    REQUIRE(cli({"generate", "bandit", "--sessions", "2", "--trials", "30", "--out", bandit.string()}).code == 0);
    CHECK(cli({"fit", "--algo", "iql", "--in", demos, "--env", (bandit / "env.json").string(), "--out", out})
              .code == kExitData);

    write_text_file(dir / "short.json", R"({"em":{"max_iter":1}})");
    CHECK(cli({"fit", "--algo", "lv-iavi", "--k", "2", "--restarts", "1", "--config",
               (dir / "short.json").string(), "--in", demos, "--env", (dir / "env.json").string(), "--out",
               out, "--strict"})
              .code == kExitNotConverged);
    CHECK(fs::exists(out));
    CHECK(cli({"eval", "--model", out, "--in", demos, "--metrics", "evd"}).code == kExitData);
    CHECK(cli({"eval", "--model", out, "--in", demos, "--metrics", "nope"}).code == kExitUsage);
    CHECK(cli({"--version"}).code == kExitOk);
}

}

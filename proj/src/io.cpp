#include "miirl/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace miirl {

namespace fs = std::filesystem;

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) +
                                        (column > 0 ? ", column " + std::to_string(column) : "") +
                                        ": " + what
                                  : what),
      line_(line),
      column_(column) {}

namespace {

constexpr const char* kDemoFormat = "miirl-demonstrations";
constexpr const char* kEnvFormat = "miirl-environment";
constexpr const char* kBundleFormat = "miirl-result";

int require_int(const Json& j, const char* key, std::size_t line) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", line);
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ParseError(std::string("field '") + key + "' must be an integer", line);
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw ParseError(std::string("field '") + key + "' out of range", line);
    }
    return static_cast<int>(x);
}

void check_format(const Json& j, const char* format, std::size_t line = 0) {
    if (!j.is_object()) throw ParseError("expected a JSON object", line);
    if (!j.contains("format") || j.at("format") != format) {
        throw ParseError(std::string("not a ") + format + " document", line);
    }
    if (!j.contains("version") || !j.at("version").is_number_integer()) {
        throw ParseError("missing version field", line);
    }
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) {
        throw ParseError("unsupported version " + std::to_string(version) + " (expected " +
                             std::to_string(kFormatVersion) + ")",
                         line);
    }
}

Trajectory parse_record(const Json& j, int num_states, int num_actions, std::size_t line,
                        double& weight, int& label) {
    if (!j.is_object()) throw ParseError("record must be a JSON object", line);
    Trajectory traj;
    if (!j.contains("id") || !j.at("id").is_string()) throw ParseError("missing string field 'id'", line);
    traj.id = j.at("id").get<std::string>();
    if (j.contains("session")) {
        if (!j.at("session").is_string()) throw ParseError("field 'session' must be a string", line);
        traj.session = j.at("session").get<std::string>();
    }
    if (!j.contains("steps") || !j.at("steps").is_array()) throw ParseError("missing array field 'steps'", line);
    for (const auto& step : j.at("steps")) {
        if (!step.is_array() || step.size() != 2 || !step[0].is_number_integer() ||
            !step[1].is_number_integer()) {
            throw ParseError("each step must be a [state, action] integer pair", line);
        }
        const auto s = step[0].get<long long>();
        const auto a = step[1].get<long long>();
        if (s < 0 || s >= num_states) {
            throw ParseError("state index " + std::to_string(s) + " outside [0, " +
                                 std::to_string(num_states) + ")",
                             line);
        }
        if (a < 0 || a >= num_actions) {
            throw ParseError("action index " + std::to_string(a) + " outside [0, " +
                                 std::to_string(num_actions) + ")",
                             line);
        }
        traj.steps.push_back({static_cast<int>(s), static_cast<int>(a)});
    }
    if (j.contains("next_state")) {
        const int ns = require_int(j, "next_state", line);
        if (ns < 0 || ns >= num_states) throw ParseError("next_state out of range", line);
        traj.next_state = ns;
    }
    weight = 1.0;
    if (j.contains("weight")) {
        if (!j.at("weight").is_number()) throw ParseError("field 'weight' must be a number", line);
        weight = j.at("weight").get<double>();
        if (!std::isfinite(weight) || weight < 0.0) throw ParseError("weight must be finite and >= 0", line);
    }
    label = -1;
    if (j.contains("truth_label")) {
        label = require_int(j, "truth_label", line);
        if (label < 0) throw ParseError("truth_label must be non-negative", line);
    }
    return traj;
}

}  // namespace

bool DemoFile::has_labels() const {
    if (labels.empty()) return false;
    for (int l : labels) {
        if (l < 0) return false;
    }
    return true;
}

DemoFile parse_demonstrations(std::istream& in) {
    DemoFile file;
    std::string text;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, text)) {
        ++line_no;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ParseError("malformed JSON", line_no, e.byte);
        }
        if (!have_header) {
            if (!j.is_object() || j.value("type", "") != "header") {
                throw ParseError("first record must be the header", line_no);
            }
            check_format(j, kDemoFormat, line_no);
            file.num_states = require_int(j, "num_states", line_no);
            file.num_actions = require_int(j, "num_actions", line_no);
            if (file.num_states < 1 || file.num_actions < 1) {
                throw ParseError("header sizes must be positive", line_no);
            }
            have_header = true;
            continue;
        }
        double weight = 1.0;
        int label = -1;
        auto traj = parse_record(j, file.num_states, file.num_actions, line_no, weight, label);
        file.demos.add(std::move(traj), weight);
        file.labels.push_back(label);
    }
    if (!have_header) file.warnings.push_back("empty demonstration file");
    return file;
}

DemoFile load_demonstrations(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_demonstrations(in);
}

void write_demonstrations(std::ostream& out, const DemoFile& file) {
    Json header = {{"type", "header"},
                   {"format", kDemoFormat},
                   {"version", kFormatVersion},
                   {"num_states", file.num_states},
                   {"num_actions", file.num_actions}};
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < file.demos.size(); ++i) {
        const auto& traj = file.demos.trajectories[i];
        Json rec;
        rec["id"] = traj.id;
        rec["session"] = traj.session;
        Json steps = Json::array();
        for (const auto& st : traj.steps) steps.push_back({st.state, st.action});
        rec["steps"] = std::move(steps);
        if (traj.next_state) rec["next_state"] = *traj.next_state;
        if (file.demos.weights[i] != 1.0) rec["weight"] = file.demos.weights[i];
        if (i < file.labels.size() && file.labels[i] >= 0) rec["truth_label"] = file.labels[i];
        out << rec.dump() << '\n';
    }
}

void save_demonstrations(const DemoFile& file, const fs::path& path) {
    std::ostringstream out;
    write_demonstrations(out, file);
    write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------

Json real_to_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double real_from_json(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw ParseError("expected a real number, got " + j.dump(), 0);
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(real_to_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("expected a matrix (array of rows)", 0);
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ParseError("ragged matrix", 0);
        }
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = real_from_json(row[static_cast<std::size_t>(k)]);
    }
    return m;
}

namespace {

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real_to_json(v(i)));
    return out;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("expected an array of reals", 0);
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = real_from_json(j[i]);
    return v;
}

Json reals_to_json(const std::vector<double>& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(real_to_json(x));
    return out;
}

std::vector<double> reals_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("expected an array of reals", 0);
    std::vector<double> v;
    for (const auto& x : j) v.push_back(real_from_json(x));
    return v;
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", 0);
    return j.at(key);
}

}  // namespace

// ---------------------------------------------------------------------------

Json environment_to_json(const EnvironmentFile& env) {
    const auto& mdp = env.mdp;
    Json j = {{"format", kEnvFormat},
              {"version", kFormatVersion},
              {"kind", env.kind},
              {"num_states", mdp.num_states()},
              {"num_actions", mdp.num_actions()},
              {"discount", mdp.discount()}};
    if (mdp.has_transitions()) {
        Json sparse = Json::array();
        const Matrix& T = mdp.transitions();
        for (int s = 0; s < mdp.num_states(); ++s) {
            for (int a = 0; a < mdp.num_actions(); ++a) {
                for (int n = 0; n < mdp.num_states(); ++n) {
                    const double p = T(mdp.row(s, a), n);
                    if (p != 0.0) sparse.push_back({s, a, n, p});
                }
            }
        }
        j["transitions"] = std::move(sparse);
    } else {
        j["transitions"] = nullptr;
    }
    Json rewards = Json::array();
    for (const auto& r : env.truth_rewards) rewards.push_back(matrix_to_json(r.values));
    Json policies = Json::array();
    for (const auto& p : env.truth_policies) policies.push_back(matrix_to_json(p.probs));
    j["truth"] = {{"rewards", std::move(rewards)}, {"policies", std::move(policies)}};
    j["extra"] = env.extra;
    return j;
}

EnvironmentFile environment_from_json(const Json& j) {
    check_format(j, kEnvFormat);
    EnvironmentFile env;
    env.kind = field(j, "kind").get<std::string>();
    const int S = require_int(j, "num_states", 0);
    const int A = require_int(j, "num_actions", 0);
    const double gamma = field(j, "discount").get<double>();
    const auto& tj = field(j, "transitions");
    if (tj.is_null()) {
        env.mdp = TabularMDP(S, A, gamma);
    } else {
        Matrix T = Matrix::Zero(static_cast<Eigen::Index>(S) * A, S);
        for (const auto& e : tj) {
            if (!e.is_array() || e.size() != 4) throw ParseError("transition entries are [s, a, s', p]", 0);
            const int s = e[0].get<int>();
            const int a = e[1].get<int>();
            const int n = e[2].get<int>();
            if (s < 0 || s >= S || a < 0 || a >= A || n < 0 || n >= S) {
                throw ParseError("transition index out of range", 0);
            }
            T(static_cast<Eigen::Index>(s) * A + a, n) = e[3].get<double>();
        }
        env.mdp = TabularMDP(S, A, gamma, std::move(T));
    }
    if (j.contains("truth")) {
        const auto& truth = j.at("truth");
        for (const auto& r : truth.value("rewards", Json::array())) {
            env.truth_rewards.push_back({matrix_from_json(r)});
        }
        for (const auto& p : truth.value("policies", Json::array())) {
            env.truth_policies.push_back({matrix_from_json(p)});
        }
    }
    env.extra = j.value("extra", Json::object());
    return env;
}

EnvironmentFile load_environment(const fs::path& path) {
    const auto text = read_text_file(path);
    try {
        return environment_from_json(Json::parse(text));
    } catch (const Json::parse_error& e) {
        throw ParseError("malformed environment JSON", 0, e.byte);
    } catch (const Json::type_error& e) {
        throw ParseError(std::string("environment schema mismatch: ") + e.what(), 0);
    }
}

void save_environment(const EnvironmentFile& env, const fs::path& path) {
    write_text_file(path, environment_to_json(env).dump(1) + "\n");
}

// ---------------------------------------------------------------------------

std::string config_hash(const Json& config) {
    // nlohmann objects are key-sorted, so dump() is canonical.
    const std::string text = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

Json bundle_to_json(const ResultBundle& bundle) {
    const auto& m = bundle.model;
    Json model = {{"algorithm", std::string(to_string(m.algorithm))},
                  {"num_intentions", m.num_intentions()},
                  {"per_step_switching", m.per_step_switching},
                  {"prior", vector_to_json(m.prior)},
                  {"train_ll", real_to_json(m.train_ll)}};
    model["trans"] = m.trans.size() > 0 ? matrix_to_json(m.trans) : Json(nullptr);
    Json rewards = Json::array();
    for (const auto& r : m.rewards) rewards.push_back(matrix_to_json(r.values));
    Json qs = Json::array();
    for (const auto& q : m.qs) qs.push_back(matrix_to_json(q.values));
    model["rewards"] = std::move(rewards);
    model["qs"] = std::move(qs);

    Json trace = {{"log_likelihood", reals_to_json(m.trace.log_likelihood)},
                  {"reward_delta", reals_to_json(m.trace.reward_delta)},
                  {"posterior_delta", reals_to_json(m.trace.posterior_delta)},
                  {"iterations", m.trace.iterations},
                  {"converged", m.trace.converged}};

    Json metrics = Json::object();
    for (const auto& [k, v] : bundle.metrics) metrics[k] = real_to_json(v);

    const auto& p = bundle.provenance;
    Json provenance = {{"config_hash", p.config_hash},
                       {"tool_version", p.tool_version},
                       {"master_seed", p.master_seed},
                       {"seeds", p.seeds},
                       {"selected_restart", p.selected_restart},
                       {"config", p.config}};

    return {{"format", kBundleFormat},
            {"version", kFormatVersion},
            {"model", std::move(model)},
            {"trace", std::move(trace)},
            {"posteriors", matrix_to_json(m.posteriors)},
            {"metrics", std::move(metrics)},
            {"provenance", std::move(provenance)}};
}

ResultBundle bundle_from_json(const Json& j) {
    check_format(j, kBundleFormat);
    if (!j.contains("provenance")) throw ParseError("result bundle lacks provenance", 0);
    ResultBundle b;
    try {
        const auto& pj = j.at("provenance");
        b.provenance.config_hash = field(pj, "config_hash").get<std::string>();
        b.provenance.tool_version = field(pj, "tool_version").get<std::string>();
        b.provenance.master_seed = field(pj, "master_seed").get<std::uint64_t>();
        b.provenance.seeds = field(pj, "seeds").get<std::vector<std::uint64_t>>();
        b.provenance.selected_restart = field(pj, "selected_restart").get<int>();
        b.provenance.config = field(pj, "config");

        const auto& mj = field(j, "model");
        auto& m = b.model;
        m.algorithm = parse_algorithm(field(mj, "algorithm").get<std::string>());
        m.per_step_switching = field(mj, "per_step_switching").get<bool>();
        m.prior = vector_from_json(field(mj, "prior"));
        if (!field(mj, "trans").is_null()) m.trans = matrix_from_json(mj.at("trans"));
        for (const auto& r : field(mj, "rewards")) m.rewards.push_back({matrix_from_json(r)});
        for (const auto& q : field(mj, "qs")) m.qs.push_back({matrix_from_json(q)});
        m.train_ll = real_from_json(field(mj, "train_ll"));
        if (static_cast<int>(m.rewards.size()) != m.num_intentions() ||
            m.qs.size() != m.rewards.size()) {
            throw ParseError("intention count mismatch in model", 0);
        }

        const auto& tj = field(j, "trace");
        m.trace.log_likelihood = reals_from_json(field(tj, "log_likelihood"));
        m.trace.reward_delta = reals_from_json(field(tj, "reward_delta"));
        m.trace.posterior_delta = reals_from_json(field(tj, "posterior_delta"));
        m.trace.iterations = field(tj, "iterations").get<int>();
        m.trace.converged = field(tj, "converged").get<bool>();

        m.posteriors = matrix_from_json(field(j, "posteriors"));
        m.restart_seeds = b.provenance.seeds;
        m.selected_restart = b.provenance.selected_restart;
        for (const auto& [k, v] : field(j, "metrics").items()) b.metrics[k] = real_from_json(v);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("result bundle schema mismatch: ") + e.what(), 0);
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("result bundle schema mismatch: ") + e.what(), 0);
    }
    return b;
}

ResultBundle load_result_bundle(const fs::path& path) {
    const auto text = read_text_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError("malformed result bundle JSON", 0, e.byte);
    }
    return bundle_from_json(j);
}

void save_result_bundle(const ResultBundle& bundle, const fs::path& path) {
    write_text_file(path, bundle_to_json(bundle).dump(1) + "\n");
}

// ---------------------------------------------------------------------------

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out << ',';
            const auto& c = cells[i];
            if (c.find_first_of(",\"\n") != std::string::npos) {
                out << '"';
                for (char ch : c) {
                    if (ch == '"') out << '"';
                    out << ch;
                }
                out << '"';
            } else {
                out << c;
            }
        }
        out << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace miirl

namespace miirl {

namespace {

template <typename T>
void take(const Json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ParseError(std::string("unknown field '") + key + "' in " + where, 0);
    }
}

}  // namespace

Json run_config_to_json(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    const auto& sc = s.em.solver_cfg;
    Json solver = {{"reward_tol", sc.reward_tol},       {"max_sweeps", sc.max_sweeps},
                   {"policy_smoothing", sc.policy_smoothing}, {"iql_epochs", sc.iql_epochs},
                   {"iql_lr_q", sc.iql_lr_q},           {"iql_lr_r", sc.iql_lr_r},
                   {"iql_lr_sh", sc.iql_lr_sh},         {"iql_shuffle", sc.iql_shuffle},
                   {"rng_seed", sc.rng_seed}};
    Json em = {{"max_iter", s.em.max_iter},
               {"tol", s.em.tol},
               {"warm_start", s.em.warm_start},
               {"transition_noise",
                s.em.transition_noise == TransitionNoise::all_entries ? "all" : "diagonal"},
               {"transition_noise_sd", s.em.transition_noise_sd},
               {"init_reward_sd", s.em.init_reward_sd},
               {"init_q_sd", s.em.init_q_sd}};
    return {{"algorithm", std::string(to_string(s.algorithm))},
            {"k", s.num_intentions},
            {"restarts", s.restarts},
            {"per_step_switching", s.per_step_switching},
            {"gamma", cfg.gamma ? Json(*cfg.gamma) : Json(nullptr)},
            {"seed", cfg.seed},
            {"solver", std::move(solver)},
            {"em", std::move(em)}};
}

RunConfig run_config_from_json(const Json& j, RunConfig base) {
    if (!j.is_object()) throw ParseError("run configuration must be a JSON object", 0);
    RunConfig cfg = std::move(base);
    try {
        reject_unknown(j, {"algorithm", "k", "restarts", "per_step_switching", "gamma", "seed",
                           "solver", "em"},
                       "run configuration");
        auto& s = cfg.spec;
        if (j.contains("algorithm")) {
            s.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
            s.em.solver = solver_of(s.algorithm);
        }
        take(j, "k", s.num_intentions);
        take(j, "restarts", s.restarts);
        take(j, "per_step_switching", s.per_step_switching);
        take(j, "seed", cfg.seed);
        if (j.contains("gamma")) {
            if (j.at("gamma").is_null()) {
                cfg.gamma.reset();
            } else {
                cfg.gamma = j.at("gamma").get<double>();
            }
        }
        if (j.contains("solver")) {
            const auto& sj = j.at("solver");
            reject_unknown(sj, {"reward_tol", "max_sweeps", "policy_smoothing", "iql_epochs",
                                "iql_lr_q", "iql_lr_r", "iql_lr_sh", "iql_shuffle", "rng_seed"},
                           "solver block");
            auto& sc = s.em.solver_cfg;
            take(sj, "reward_tol", sc.reward_tol);
            take(sj, "max_sweeps", sc.max_sweeps);
            take(sj, "policy_smoothing", sc.policy_smoothing);
            take(sj, "iql_epochs", sc.iql_epochs);
            take(sj, "iql_lr_q", sc.iql_lr_q);
            take(sj, "iql_lr_r", sc.iql_lr_r);
            take(sj, "iql_lr_sh", sc.iql_lr_sh);
            take(sj, "iql_shuffle", sc.iql_shuffle);
            take(sj, "rng_seed", sc.rng_seed);
        }
        if (j.contains("em")) {
            const auto& ej = j.at("em");
            reject_unknown(ej, {"max_iter", "tol", "warm_start", "transition_noise",
                                "transition_noise_sd", "init_reward_sd", "init_q_sd"},
                           "em block");
            take(ej, "max_iter", s.em.max_iter);
            take(ej, "tol", s.em.tol);
            take(ej, "warm_start", s.em.warm_start);
            if (ej.contains("transition_noise")) {
                const auto mode = ej.at("transition_noise").get<std::string>();
                if (mode == "all") {
                    s.em.transition_noise = TransitionNoise::all_entries;
                } else if (mode == "diagonal") {
                    s.em.transition_noise = TransitionNoise::diagonal;
                } else {
                    throw ParseError("transition_noise must be 'all' or 'diagonal'", 0);
                }
            }
            take(ej, "transition_noise_sd", s.em.transition_noise_sd);
            take(ej, "init_reward_sd", s.em.init_reward_sd);
            take(ej, "init_q_sd", s.em.init_q_sd);
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("run configuration schema mismatch: ") + e.what(), 0);
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("run configuration: ") + e.what(), 0);
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
    const auto text = read_text_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError("malformed run configuration JSON", 0, e.byte);
    }
    return run_config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kTrialHeader = "session,trial,choice,correct,block,rewarded_spout,latent";

}  // namespace

void write_bandit_trials(std::ostream& out, const std::vector<TrialRecord>& trials) {
    out << kTrialHeader << '\n';
    for (const auto& t : trials) {
        out << t.session << ',' << t.trial << ',' << t.choice << ',' << (t.correct ? 1 : 0) << ','
            << t.block << ',' << t.rewarded_spout << ',' << t.latent << '\n';
    }
}

std::vector<TrialRecord> parse_bandit_trials(std::istream& in) {
    std::vector<TrialRecord> trials;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kTrialHeader) throw ParseError("unexpected trial log header", 1);
            continue;
        }
        std::vector<long long> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const auto comma = line.find(',', pos);
            const auto cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("expected an integer", line_no, pos + 1);
            }
            if (used != cell.size()) throw ParseError("expected an integer", line_no, pos + 1);
            cells.push_back(v);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cells.size() != 7) throw ParseError("expected 7 columns", line_no);
        TrialRecord t;
        t.session = static_cast<int>(cells[0]);
        t.trial = static_cast<int>(cells[1]);
        t.choice = static_cast<int>(cells[2]);
        t.correct = cells[3] != 0;
        t.block = static_cast<int>(cells[4]);
        t.rewarded_spout = static_cast<int>(cells[5]);
        t.latent = static_cast<int>(cells[6]);
        if (t.choice < 0 || t.choice > 1 || t.rewarded_spout < 0 || t.rewarded_spout > 1 ||
            cells[3] < 0 || cells[3] > 1 || t.session < 0 || t.trial < 0) {
            throw ParseError("field out of range", line_no);
        }
        trials.push_back(t);
    }
    return trials;
}

std::vector<TrialRecord> load_bandit_trials(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_bandit_trials(in);
}

}  // namespace miirl

#pragma once

#include "miirl/environments.hpp"
#include "miirl/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>

namespace miirl {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

/// Malformed input; line and column are 1-based (0 when not applicable).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 0);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// ---------------------------------------------------------------------------
// Demonstrations (JSON lines)
// ---------------------------------------------------------------------------

struct DemoFile {
    int num_states = 0;
    int num_actions = 0;
    Demonstrations demos;
    /// Ground-truth intention per trajectory; -1 when the record carries none.
    std::vector<int> labels;
    std::vector<std::string> warnings;

    bool has_labels() const;
};

DemoFile parse_demonstrations(std::istream& in);
DemoFile load_demonstrations(const std::filesystem::path& path);

void write_demonstrations(std::ostream& out, const DemoFile& file);
void save_demonstrations(const DemoFile& file, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Environment description
// ---------------------------------------------------------------------------

struct EnvironmentFile {
    std::string kind;
    TabularMDP mdp{1, 1, 0.0};
    std::vector<RewardTable> truth_rewards;
    std::vector<PolicyTable> truth_policies;
    /// Generator parameters and task-specific details.
    Json extra = Json::object();
};

Json environment_to_json(const EnvironmentFile& env);
EnvironmentFile environment_from_json(const Json& j);
EnvironmentFile load_environment(const std::filesystem::path& path);
void save_environment(const EnvironmentFile& env, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Result bundles
// ---------------------------------------------------------------------------

struct Provenance {
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> seeds;
    int selected_restart = 0;
    Json config = Json::object();
};

struct ResultBundle {
    FittedModel model;
    std::map<std::string, double> metrics;
    Provenance provenance;
};

Json bundle_to_json(const ResultBundle& bundle);
/// Throws ParseError on schema or version mismatch.
ResultBundle bundle_from_json(const Json& j);
ResultBundle load_result_bundle(const std::filesystem::path& path);
void save_result_bundle(const ResultBundle& bundle, const std::filesystem::path& path);

/// 64-bit FNV-1a of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const Json& config);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    FitSpec spec;
    /// Overrides the environment discount when set.
    std::optional<double> gamma;
    std::uint64_t seed = 0;

    RunConfig() { spec.restarts = 10; }
};

/// Every field is written, so the dump doubles as the provenance record.
Json run_config_to_json(const RunConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected with ParseError.
RunConfig run_config_from_json(const Json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// ---------------------------------------------------------------------------
// Raw bandit trial logs (CSV)
// ---------------------------------------------------------------------------

void write_bandit_trials(std::ostream& out, const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> parse_bandit_trials(std::istream& in);
std::vector<TrialRecord> load_bandit_trials(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Helpers shared with the CLI
// ---------------------------------------------------------------------------

/// Finite values stay numbers; non-finite ones become "inf", "-inf" or "nan".
Json real_to_json(double v);
double real_from_json(const Json& j);
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// Writes a CSV table; cells are emitted verbatim, doubles via format_real.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string format_real(double v);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and renames it over the target.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace miirl

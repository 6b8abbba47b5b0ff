#pragma once

#include "analogist/errors.hpp"
#include "analogist/evaluation.hpp"
#include "analogist/events.hpp"
#include "analogist/gateway.hpp"
#include "analogist/generation.hpp"
#include "analogist/prompts.hpp"
#include "analogist/retrieval.hpp"
#include "analogist/wiki.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace analogist {

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    Method method = Method::SelfReflect;
    std::string dataset_path;  // input events, JSONL
    std::string pool_path;     // historical pool, JSONL (retrieval + random baselines)
    std::string gold_path;     // gold analogs, JSONL (optional)
    std::string out_dir = "out";
    // Fixture directory holding chat.jsonl (model recordings) and wiki.json
    // (encyclopedia recordings). Replay source / record sink.
    std::string fixtures_dir;
    std::string cache_dir;     // content-addressed response cache; empty disables
    std::string prompts_path;  // prompt registry overlay file (optional)
    RunMode mode = RunMode::Replay;
    MdsConfig mds{};
    ReflectionConfig reflection{};
    std::optional<std::uint64_t> seed;  // required by the random baselines
    int jobs = 4;
    double requests_per_minute = 0.0;
    double temperature = 0.1;
    std::string chat_model = "gpt-3.5-turbo-0125";
    std::string judge_model = "gpt-4";
    // "hash" selects the deterministic local embedder; any other value names a
    // provider embedding model.
    std::string embedding = "hash";
    std::string api_base = "https://api.openai.com";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string wiki_base = "https://en.wikipedia.org";
    std::string user_agent = "analogist/0.1 (research harness)";
};

// Cross-field invariants for running `method`: retrieval and random-pool
// methods need a pool, replay/record need a fixture directory, random
// baselines need a seed. Throws ConfigError.
void validate(const RunConfig& config, Method method);

// Overlays fields present in a JSON config file onto `config`. Unknown keys
// throw ConfigError (typo protection). CLI flags are applied after this, so
// precedence is flags > file > built-in defaults.
void apply_config_file(RunConfig& config, const std::string& path);

std::string chat_fixture_path(const RunConfig& config);
std::string wiki_fixture_path(const RunConfig& config);

// ---------------------------------------------------------------------------
// Service construction

struct Services {
    std::unique_ptr<Gateway> gateway;
    std::shared_ptr<WikiSource> wiki;
    std::unique_ptr<Verifier> verifier;
    PromptRegistry prompts;
};

// Builds the gateway, verifier and prompt registry for the configured mode.
// Null overrides pick the mode defaults: replay reads fixtures, live/record
// talk HTTP. Tests inject scripted backends through the overrides; in record
// mode an injected wiki source is wrapped so its responses land in the
// fixture file.
Services make_services(const RunConfig& config,
                       std::unique_ptr<ChatBackend> chat_override = nullptr,
                       std::shared_ptr<WikiSource> wiki_override = nullptr);

// ---------------------------------------------------------------------------
// Reports

struct SampleFailure {
    std::string input_id;
    Method method = Method::DirectGen;
    ErrorFamily family = ErrorFamily::Config;
    std::string message;
};

// One Table-1-shaped row: per-dimension means over the completed samples.
struct MethodReport {
    Method method = Method::DirectGen;
    std::size_t completed = 0;
    std::size_t excluded = 0;
    std::array<double, 4> mean_abs{};  // Topic, Background, Process, Result
    std::array<double, 4> mean_lit{};
    std::array<double, 4> mean_all{};
    double mean_mds = 0.0;
    std::optional<double> pass_rate;  // present iff any sample had gold
};

struct EvaluateOutcome {
    std::vector<MethodReport> rows;  // one per requested method, request order
    std::vector<SampleFailure> failures;
    std::size_t total = 0;  // requested samples = |methods| * |dataset|
};

// Pure aggregation of per-sample records into a report row.
MethodReport aggregate(Method method, const std::vector<EvaluationRecord>& records,
                       std::size_t excluded);

nlohmann::json report_to_json(const EvaluateOutcome& outcome, const MdsConfig& config);
std::string report_to_csv(const EvaluateOutcome& outcome);

// ---------------------------------------------------------------------------
// Calibration file I/O
//
// scored file:   JSONL of {"input_id", "alternatives": [{"abs": [4 ints],
//                "lit": [4 floats]}, ...]}
// rankings file: JSONL of {"input_id", "ranking": [rank per alternative]}
// The two files must cover the same input ids with matching lengths.

std::vector<CalibrationSample> load_calibration_files(const std::string& scored_path,
                                                      const std::string& rankings_path);

nlohmann::json calibration_report(const CalibrationResult& result);

// ---------------------------------------------------------------------------
// The harness: pipeline dispatch + batch orchestration

class Harness {
public:
    explicit Harness(RunConfig config, std::unique_ptr<ChatBackend> chat_override = nullptr,
                     std::shared_ptr<WikiSource> wiki_override = nullptr);

    // Runs the configured pipeline once and writes
    // out_dir/traces/<method>-<id>.json. Replay runs are byte-deterministic.
    AnalogyResult analogize(const Event& input);
    AnalogyResult analogize(const Event& input, Method method);

    // Runs every method over every dataset event, scoring each result.
    // Per-sample outcomes persist under out_dir/samples/<method>/ as they
    // complete, so an interrupted run resumes without repeating model calls;
    // the report is re-aggregated from the persisted records every time.
    // Failures are recorded, excluded from means, and reported per row.
    EvaluateOutcome evaluate(const std::vector<Method>& methods);

    // Validates the pool and builds (or reloads) its embedding index.
    std::pair<std::size_t, std::size_t> ingest();  // (pool size, index size)

    // Dimension summaries + pair score for two ad-hoc events.
    nlohmann::json score_events(const Event& a, const Event& b);

    Gateway& gateway() { return *services_.gateway; }
    Verifier& verifier() { return *services_.verifier; }
    const PromptRegistry& prompts() const { return services_.prompts; }
    const RunConfig& config() const { return config_; }

private:
    const EventPool& pool();
    const EventPool& pool_locked();
    const EmbeddingIndex& index();
    void prepare(const std::vector<Method>& methods);
    AnalogyResult dispatch(const Event& input, Method method);
    std::uint64_t sample_seed(const std::string& input_id) const;

    RunConfig config_;
    Services services_;
    std::optional<EventPool> pool_;
    std::optional<EmbeddingIndex> index_;
    std::mutex mutex_;
};

// Filesystem-safe, collision-free name for a sample id.
std::string sample_file_name(const std::string& input_id);

}  // namespace analogist

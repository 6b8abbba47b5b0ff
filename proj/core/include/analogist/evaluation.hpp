#pragma once

#include "analogist/events.hpp"
#include "analogist/gateway.hpp"

#include <array>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace analogist {

class Verifier;

enum class Dimension { Topic, Background, Process, Result };

inline constexpr std::array<Dimension, 4> kDimensions{Dimension::Topic, Dimension::Background,
                                                      Dimension::Process, Dimension::Result};

std::string to_string(Dimension dimension);
const std::string& dimension_text(const DimensionalSummary& summary, Dimension dimension);

// Weights and threshold of the multi-dimensional similarity. Defaults are
// the published operating point.
struct MdsConfig {
    std::array<double, 4> weights{0.5, 1.0, 2.0, 2.0};  // topic, background, process, result
    double alpha = 0.35;
};

// Throws ConfigError unless weights are non-negative with at least one > 0
// and alpha is in (0, 1].
void validate(const MdsConfig& config);

// Per-dimension judge score and token overlap, before the threshold gate.
struct RawScores {
    std::array<int, 4> abs{1, 1, 1, 1};      // each in [1, 4]
    std::array<double, 4> lit{0, 0, 0, 0};   // each in [0, 1]
};

void validate(const RawScores& raw);

struct DimensionScores {
    std::array<int, 4> abs{};
    std::array<double, 4> lit{};
    std::array<double, 4> all{};  // abs_d * max(alpha - lit_d, 0)
};

// Applies the threshold gate: all_d = abs_d * max(alpha - lit_d, 0).
DimensionScores make_dimension_scores(const RawScores& raw, const MdsConfig& config);

// MDS = sum_d w_d * all_d. Pure; bit-identical for identical inputs.
double mds(const DimensionScores& scores, const MdsConfig& config);

// Largest value mds can take under the config: 4 * alpha * sum(w).
double mds_upper_bound(const MdsConfig& config);

// ---------------------------------------------------------------------------
// Literal similarity

// Distinct casefolded word tokens (see text::word_token_set).
std::set<std::string> tokenize(std::string_view s);

// Jaccard overlap of token sets; both texts empty -> 1 (identical emptiness).
double literal_similarity(std::string_view a, std::string_view b);

// ---------------------------------------------------------------------------
// Judge calls (summaries + abstract similarity)

inline constexpr int kJudgeRetryBudget = 3;

// Parses the four labeled parts out of a summarization response. Labels are
// case-insensitive, any order; each captures to the end of its paragraph.
// Throws ParseError when a part is missing.
DimensionalSummary parse_dimensional_summary(const std::string& response);

// Judge-model access with an in-process memo so identical events and pairs
// are scored once per run. Thread-safe.
class Judge {
public:
    Judge(Gateway& gateway, const PromptRegistry& prompts);

    // Four-dimension summary of the event description (judge model).
    DimensionalSummary summarize(const Event& event);
    DimensionalSummary summarize_description(const std::string& title,
                                             const std::string& description);

    // 1-4 abstract similarity of two per-dimension texts (judge model).
    int abstract_similarity(const std::string& text_a, const std::string& text_b);

    Gateway& gateway() { return gateway_; }

private:
    Gateway& gateway_;
    const PromptRegistry& prompts_;
    std::mutex mutex_;
    std::unordered_map<std::string, DimensionalSummary> summary_cache_;
    std::unordered_map<std::string, int> score_cache_;
};

// Free-function form used by pipelines that need the input's summary.
DimensionalSummary summarize_dimensions(const Event& event, Gateway& gateway,
                                        const PromptRegistry& prompts);

// Per-dimension judge + Jaccard over two complete summaries.
RawScores score_pair_raw(const DimensionalSummary& input_summary,
                         const DimensionalSummary& analog_summary, Judge& judge);

DimensionScores score_pair(const DimensionalSummary& input_summary,
                           const DimensionalSummary& analog_summary, Judge& judge,
                           const MdsConfig& config);

// ---------------------------------------------------------------------------
// Pass@1

// True iff the analog's normalized title matches a gold canonical title or
// alias, or (with a verifier) the analog's page id matches a gold answer's.
bool pass_at_1(const AnalogyResult& result, const GoldAnalogy& gold,
               Verifier* verifier = nullptr);

// ---------------------------------------------------------------------------
// Rank correlation + calibration

// (spearman rho, pearson r) between two equal-length value vectors; Spearman
// uses average ranks on ties. Throws DegenerateInput on constant input.
std::pair<double, double> rank_correlation(const std::vector<double>& a,
                                           const std::vector<double>& b);

struct CalibrationSample {
    std::string input_id;
    std::vector<RawScores> alternatives;   // >= 2
    std::vector<double> human_ranking;     // rank per alternative, 1 = best
};

struct CalibrationCell {
    MdsConfig config;
    double mean_spearman = 0.0;
    double mean_pearson = 0.0;
};

struct CalibrationResult {
    MdsConfig best;
    double mean_spearman = 0.0;
    double mean_pearson = 0.0;
    std::vector<CalibrationCell> grid;  // full search trace, search order
};

// Grid axes (weights deduplicated up to positive scaling before the search).
std::vector<std::array<double, 4>> calibration_weight_grid();
std::vector<double> calibration_alpha_grid();

// Exhaustive grid search maximizing mean Spearman between mds rankings and
// human rankings; ties break toward the default config.
CalibrationResult calibrate(const std::vector<CalibrationSample>& samples);

// ---------------------------------------------------------------------------
// Per-sample evaluation record

struct EvaluationRecord {
    std::string input_id;
    Method method = Method::DirectGen;
    std::string analog_title;
    DimensionScores scores;
    double mds = 0.0;
    std::optional<bool> passed;  // present iff gold exists for the input
};

nlohmann::json to_json(const EvaluationRecord& record);
EvaluationRecord evaluation_record_from_json(const nlohmann::json& j);

// Summarizes both sides, scores the pair, checks gold when present.
EvaluationRecord evaluate_result(const Event& input, const AnalogyResult& result, Judge& judge,
                                 const MdsConfig& config, const GoldAnalogy* gold = nullptr,
                                 Verifier* verifier = nullptr);

}  // namespace analogist

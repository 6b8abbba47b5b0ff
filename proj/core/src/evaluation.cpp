#include "analogist/evaluation.hpp"

#include "analogist/text.hpp"
#include "analogist/wiki.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <set>

namespace analogist {

using nlohmann::json;

std::string to_string(Dimension dimension) {
    switch (dimension) {
        case Dimension::Topic: return "Topic";
        case Dimension::Background: return "Background";
        case Dimension::Process: return "Process";
        case Dimension::Result: return "Result";
    }
    return "?";
}

const std::string& dimension_text(const DimensionalSummary& summary, Dimension dimension) {
    switch (dimension) {
        case Dimension::Topic: return summary.topic;
        case Dimension::Background: return summary.background;
        case Dimension::Process: return summary.process;
        case Dimension::Result: return summary.result;
    }
    return summary.topic;
}

void validate(const MdsConfig& config) {
    double total = 0.0;
    for (double w : config.weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw ConfigError("mds weights must be non-negative finite numbers");
        total += w;
    }
    if (total <= 0.0) throw ConfigError("at least one mds weight must be positive");
    if (!(config.alpha > 0.0 && config.alpha <= 1.0))
        throw ConfigError("alpha must lie in (0, 1]");
}

void validate(const RawScores& raw) {
    for (int a : raw.abs)
        if (a < 1 || a > 4)
            throw SchemaError("abstract score " + std::to_string(a) + " outside [1, 4]");
    for (double l : raw.lit)
        if (!(l >= 0.0 && l <= 1.0))
            throw SchemaError("literal similarity outside [0, 1]");
}

DimensionScores make_dimension_scores(const RawScores& raw, const MdsConfig& config) {
    validate(raw);
    validate(config);
    DimensionScores scores;
    scores.abs = raw.abs;
    scores.lit = raw.lit;
    for (std::size_t d = 0; d < 4; ++d)
        scores.all[d] = raw.abs[d] * std::max(config.alpha - raw.lit[d], 0.0);
    return scores;
}

double mds(const DimensionScores& scores, const MdsConfig& config) {
    double total = 0.0;
    for (std::size_t d = 0; d < 4; ++d) total += config.weights[d] * scores.all[d];
    return total;
}

double mds_upper_bound(const MdsConfig& config) {
    double weight_sum = std::accumulate(config.weights.begin(), config.weights.end(), 0.0);
    return 4.0 * config.alpha * weight_sum;
}

std::set<std::string> tokenize(std::string_view s) { return text::word_token_set(s); }

double literal_similarity(std::string_view a, std::string_view b) {
    std::set<std::string> ta = tokenize(a);
    std::set<std::string> tb = tokenize(b);
    if (ta.empty() && tb.empty()) return 1.0;
    std::size_t intersection = 0;
    for (const auto& token : ta) intersection += tb.count(token);
    std::size_t unions = ta.size() + tb.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

// ---------------------------------------------------------------------------
// Summary parsing

namespace {

std::optional<Dimension> match_label(const std::string& line, std::size_t& content_start) {
    // Tolerate leading list markup ("- ", "* ", "1. ", "**") before the label.
    std::size_t i = 0;
    while (i < line.size() && !std::isalpha(static_cast<unsigned char>(line[i]))) ++i;
    static const std::pair<const char*, Dimension> labels[] = {
        {"topic", Dimension::Topic},
        {"background", Dimension::Background},
        {"process", Dimension::Process},
        {"result", Dimension::Result},
    };
    for (const auto& [label, dim] : labels) {
        std::size_t len = std::strlen(label);
        if (text::ifind(line.substr(i, len), label) != 0) continue;
        std::size_t after = i + len;
        // Require a following colon (possibly after markup like "**:").
        std::size_t colon = after;
        while (colon < line.size() && (line[colon] == '*' || line[colon] == ' ')) ++colon;
        if (colon >= line.size() || line[colon] != ':') continue;
        content_start = colon + 1;
        while (content_start < line.size() &&
               (line[content_start] == ' ' || line[content_start] == '*'))
            ++content_start;
        return dim;
    }
    return std::nullopt;
}

}  // namespace

DimensionalSummary parse_dimensional_summary(const std::string& response) {
    std::array<std::optional<std::string>, 4> parts;
    std::optional<std::size_t> current;

    for (const std::string& raw_line : text::split_lines(response)) {
        std::string line = text::trim(raw_line);
        if (line.empty()) {
            current.reset();  // captures end at the paragraph boundary
            continue;
        }
        std::size_t content_start = 0;
        if (auto dim = match_label(line, content_start)) {
            std::size_t d = static_cast<std::size_t>(*dim);
            if (!parts[d]) {
                parts[d] = text::trim(line.substr(content_start));
                current = d;
            } else {
                current.reset();  // duplicate label: keep the first capture
            }
            continue;
        }
        if (current) {
            std::string& part = *parts[*current];
            if (!part.empty()) part += ' ';
            part += line;
        }
    }

    for (std::size_t d = 0; d < 4; ++d)
        if (!parts[d] || parts[d]->empty())
            throw ParseError("summary response lacks a '" +
                             to_string(static_cast<Dimension>(d)) + ":' part");

    DimensionalSummary summary;
    summary.topic = *parts[0];
    summary.background = *parts[1];
    summary.process = *parts[2];
    summary.result = *parts[3];
    return summary;
}

// ---------------------------------------------------------------------------
// Judge

Judge::Judge(Gateway& gateway, const PromptRegistry& prompts)
    : gateway_(gateway), prompts_(prompts) {}

DimensionalSummary Judge::summarize(const Event& event) {
    return summarize_description(event.title, event.description);
}

DimensionalSummary Judge::summarize_description(const std::string& title,
                                                const std::string& description) {
    if (text::trim(description).empty()) throw ConfigError("summarize: empty description");
    std::string key = sha256_hex("sum\x1f" + description);
    {
        std::lock_guard lock(mutex_);
        auto it = summary_cache_.find(key);
        if (it != summary_cache_.end()) return it->second;
    }

    std::map<std::string, std::string> bindings{{"title", title}, {"description", description}};
    std::string system = render(prompts_.system(prompt_names::kSummarize), bindings);
    std::string user = render(prompts_.user(prompt_names::kSummarize), bindings);

    DimensionalSummary summary;
    for (int attempt = 1;; ++attempt) {
        std::string prompt = user;
        if (attempt > 1)
            prompt += "\nOutput exactly four parts labeled Topic:, Background:, Process:, and "
                      "Result:, one per line.";
        std::string response = gateway_.complete(gateway_.judge_request(system, prompt));
        try {
            summary = parse_dimensional_summary(response);
            break;
        } catch (const ParseError&) {
            if (attempt >= kJudgeRetryBudget) throw;
        }
    }
    validate(summary);

    std::lock_guard lock(mutex_);
    summary_cache_.emplace(key, summary);
    return summary;
}

int Judge::abstract_similarity(const std::string& text_a, const std::string& text_b) {
    if (text::trim(text_a).empty() || text::trim(text_b).empty())
        throw ConfigError("abstract_similarity: empty dimension text");
    std::string key = sha256_hex("abs\x1f" + text_a + "\x1f" + text_b);
    {
        std::lock_guard lock(mutex_);
        auto it = score_cache_.find(key);
        if (it != score_cache_.end()) return it->second;
    }

    std::map<std::string, std::string> bindings{{"description_a", text_a},
                                                {"description_b", text_b}};
    std::string system = render(prompts_.system(prompt_names::kAbstractScore), bindings);
    std::string user = render(prompts_.user(prompt_names::kAbstractScore), bindings);

    int score = 0;
    for (int attempt = 1;; ++attempt) {
        std::string prompt = user;
        if (attempt > 1) prompt += "\nEnd your answer with \"Score: <integer 1-4>\".";
        std::string response = gateway_.complete(gateway_.judge_request(system, prompt));
        try {
            score = parse_score(response);
            break;
        } catch (const ParseError&) {
            if (attempt >= kJudgeRetryBudget) throw;
        }
    }

    std::lock_guard lock(mutex_);
    score_cache_.emplace(key, score);
    return score;
}

DimensionalSummary summarize_dimensions(const Event& event, Gateway& gateway,
                                        const PromptRegistry& prompts) {
    Judge judge(gateway, prompts);
    return judge.summarize(event);
}

RawScores score_pair_raw(const DimensionalSummary& input_summary,
                         const DimensionalSummary& analog_summary, Judge& judge) {
    RawScores raw;
    for (std::size_t d = 0; d < 4; ++d) {
        Dimension dim = kDimensions[d];
        const std::string& a = dimension_text(input_summary, dim);
        const std::string& b = dimension_text(analog_summary, dim);
        raw.abs[d] = judge.abstract_similarity(a, b);
        raw.lit[d] = literal_similarity(a, b);
    }
    return raw;
}

DimensionScores score_pair(const DimensionalSummary& input_summary,
                           const DimensionalSummary& analog_summary, Judge& judge,
                           const MdsConfig& config) {
    return make_dimension_scores(score_pair_raw(input_summary, analog_summary, judge), config);
}

// ---------------------------------------------------------------------------
// Pass@1

bool pass_at_1(const AnalogyResult& result, const GoldAnalogy& gold, Verifier* verifier) {
    if (result.input_id != gold.input.id)
        throw ConfigError("pass_at_1: result for '" + result.input_id +
                          "' scored against gold for '" + gold.input.id + "'");

    std::string analog_norm = text::normalize_title(result.analog.title);
    for (const GoldAnswer& answer : gold.answers) {
        if (text::normalize_title(answer.canonical) == analog_norm) return true;
        for (const std::string& alias : answer.aliases)
            if (text::normalize_title(alias) == analog_norm) return true;
    }

    if (!verifier) return false;

    // Page identity: different surface titles can denote the same page.
    std::optional<std::string> analog_page = result.analog.page_id;
    if (!analog_page) {
        VerificationVerdict verdict = verifier->verify(result.analog.title);
        if (verdict.ok()) analog_page = verdict.page_id;
    }
    if (!analog_page) return false;
    for (const GoldAnswer& answer : gold.answers) {
        VerificationVerdict verdict = verifier->verify(answer.canonical);
        if (verdict.ok() && verdict.page_id == *analog_page) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Rank correlation

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double n = static_cast<double>(a.size());
    double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - mean_a;
        double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0)
        throw DegenerateInput("rank_correlation over a constant ranking");
    return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

}  // namespace

std::pair<double, double> rank_correlation(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ConfigError("rank_correlation: length mismatch");
    if (a.size() < 2)
        throw ConfigError("rank_correlation needs at least two entries");
    double spearman = pearson(average_ranks(a), average_ranks(b));
    double r = pearson(a, b);
    return {spearman, r};
}

// ---------------------------------------------------------------------------
// Calibration

std::vector<double> calibration_alpha_grid() {
    return {0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
}

namespace {

std::string ray_key(const std::array<double, 4>& weights) {
    double max_w = *std::max_element(weights.begin(), weights.end());
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f,%.9f", weights[0] / max_w, weights[1] / max_w,
                  weights[2] / max_w, weights[3] / max_w);
    return buf;
}

bool same_ray(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    return ray_key(a) == ray_key(b);
}

}  // namespace

std::vector<std::array<double, 4>> calibration_weight_grid() {
    static const double axis[] = {0.25, 0.5, 1.0, 1.5, 2.0, 3.0};
    std::vector<std::array<double, 4>> grid;
    std::set<std::string> seen;
    for (double w0 : axis)
        for (double w1 : axis)
            for (double w2 : axis)
                for (double w3 : axis) {
                    std::array<double, 4> weights{w0, w1, w2, w3};
                    // MDS rankings are invariant under positive scaling of the
                    // weight vector; keep one representative per ray.
                    if (seen.insert(ray_key(weights)).second) grid.push_back(weights);
                }
    return grid;
}

CalibrationResult calibrate(const std::vector<CalibrationSample>& samples) {
    if (samples.empty()) throw ConfigError("calibrate: no samples");
    for (const CalibrationSample& sample : samples) {
        if (sample.alternatives.size() < 2)
            throw ConfigError("calibrate: sample '" + sample.input_id +
                              "' needs at least two alternatives");
        if (sample.human_ranking.size() != sample.alternatives.size())
            throw ConfigError("calibrate: sample '" + sample.input_id +
                              "' ranking length mismatch");
        for (const RawScores& raw : sample.alternatives) validate(raw);
        bool all_identical = std::all_of(
            sample.alternatives.begin(), sample.alternatives.end(), [&](const RawScores& raw) {
                return raw.abs == sample.alternatives.front().abs &&
                       raw.lit == sample.alternatives.front().lit;
            });
        if (all_identical)
            throw DegenerateInput("calibrate: sample '" + sample.input_id +
                                  "' has indistinguishable alternatives");
    }

    const MdsConfig default_config{};
    CalibrationResult result;
    double best_score = -2.0;
    bool best_is_default = false;

    for (const auto& weights : calibration_weight_grid()) {
        for (double alpha : calibration_alpha_grid()) {
            MdsConfig config;
            config.weights = weights;
            config.alpha = alpha;

            double spearman_sum = 0.0;
            double pearson_sum = 0.0;
            for (const CalibrationSample& sample : samples) {
                std::vector<double> mds_values;
                mds_values.reserve(sample.alternatives.size());
                for (const RawScores& raw : sample.alternatives)
                    mds_values.push_back(mds(make_dimension_scores(raw, config), config));
                // Rank 1 = best analog = highest mds.
                std::vector<double> negated;
                negated.reserve(mds_values.size());
                for (double v : mds_values) negated.push_back(-v);
                try {
                    auto [s, p] = rank_correlation(average_ranks(negated), sample.human_ranking);
                    spearman_sum += s;
                    pearson_sum += p;
                } catch (const DegenerateInput&) {
                    // A config that cannot distinguish the alternatives is
                    // simply uninformative on this sample.
                }
            }

            CalibrationCell cell;
            cell.config = config;
            cell.mean_spearman = spearman_sum / static_cast<double>(samples.size());
            cell.mean_pearson = pearson_sum / static_cast<double>(samples.size());
            result.grid.push_back(cell);

            bool is_default = same_ray(weights, default_config.weights) &&
                              std::abs(alpha - default_config.alpha) < 1e-12;
            constexpr double tie_eps = 1e-12;
            bool better = cell.mean_spearman > best_score + tie_eps;
            bool tie = std::abs(cell.mean_spearman - best_score) <= tie_eps;
            if (better || (tie && is_default && !best_is_default)) {
                best_score = std::max(best_score, cell.mean_spearman);
                result.best = config;
                result.mean_spearman = cell.mean_spearman;
                result.mean_pearson = cell.mean_pearson;
                best_is_default = is_default;
            }
        }
    }

    // Report the published weight vector verbatim when its ray wins.
    if (same_ray(result.best.weights, default_config.weights))
        result.best.weights = default_config.weights;
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation records

json to_json(const EvaluationRecord& record) {
    json j{{"input_id", record.input_id},
           {"method", to_string(record.method)},
           {"analog_title", record.analog_title},
           {"abs", record.scores.abs},
           {"lit", record.scores.lit},
           {"all", record.scores.all},
           {"mds", record.mds}};
    if (record.passed) j["passed"] = *record.passed;
    return j;
}

EvaluationRecord evaluation_record_from_json(const json& j) {
    EvaluationRecord record;
    record.input_id = j.at("input_id").get<std::string>();
    auto method = method_from_string(j.at("method").get<std::string>());
    if (!method) throw SchemaError("record: unknown method");
    record.method = *method;
    record.analog_title = j.at("analog_title").get<std::string>();
    record.scores.abs = j.at("abs").get<std::array<int, 4>>();
    record.scores.lit = j.at("lit").get<std::array<double, 4>>();
    record.scores.all = j.at("all").get<std::array<double, 4>>();
    record.mds = j.at("mds").get<double>();
    if (j.contains("passed")) record.passed = j["passed"].get<bool>();
    return record;
}

EvaluationRecord evaluate_result(const Event& input, const AnalogyResult& result, Judge& judge,
                                 const MdsConfig& config, const GoldAnalogy* gold,
                                 Verifier* verifier) {
    if (input.id != result.input_id)
        throw ConfigError("evaluate_result: input/result id mismatch");
    DimensionalSummary input_summary = judge.summarize(input);
    DimensionalSummary analog_summary = judge.summarize(result.analog);
    EvaluationRecord record;
    record.input_id = input.id;
    record.method = result.method;
    record.analog_title = result.analog.title;
    record.scores = score_pair(input_summary, analog_summary, judge, config);
    record.mds = mds(record.scores, config);
    if (gold) record.passed = pass_at_1(result, *gold, verifier);
    return record;
}

}  // namespace analogist

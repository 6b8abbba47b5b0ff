#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace analogist {

enum class Theme { War, Politics, CultureAndSociety, Economy };

enum class EventSource { Pool, Generated, Input };

enum class Method {
    DirectRetrieve,
    TwoStageRetrieve,
    DirectGen,
    TwoStageGen,
    SummarizeGen,
    SelfReflect,
    RandomPool,
    RandomTheme,
    RandomCandidate,
};

std::string to_string(Theme theme);
std::string to_string(Method method);
std::optional<Theme> theme_from_string(const std::string& name);
std::optional<Method> method_from_string(const std::string& name);
bool is_retrieval_method(Method method);

// A named historical or contemporary event. The unit every pipeline and the
// evaluator operate on. Immutable value type; share freely across threads.
struct Event {
    std::string id;
    std::string title;
    std::string description;
    std::optional<Theme> theme;
    EventSource source = EventSource::Input;
    // Encyclopedia page identity, set on verified generated events. Used for
    // page-identity matching in Pass@1.
    std::optional<std::string> page_id;
};

// Throws SchemaError when an invariant fails: nonempty title/description,
// pool events must carry a theme.
void validate(const Event& event);

// Four-part decomposition of an event description. Each part is one sentence
// capped at 100 words; the cap is enforced as a warning, not an error, since
// the judge model controls the text.
struct DimensionalSummary {
    std::string topic;
    std::string background;
    std::string process;
    std::string result;

    // "Topic: ...\nBackground: ..." rendering used as a prompt-side description.
    std::string to_text() const;
};

void validate(const DimensionalSummary& summary);

struct GoldAnswer {
    std::string canonical;
    std::vector<std::string> aliases;
};

// A popular-set input with its recognized answers.
struct GoldAnalogy {
    Event input;
    std::vector<GoldAnswer> answers;
};

void validate(const GoldAnalogy& gold);

enum class TraceKind { Proposal, Verification, Reflection, Selection, Retrieval };

std::string to_string(TraceKind kind);

// One step of a pipeline run. The payload is a structured record whose shape
// depends on the kind; validate() checks kind/payload consistency.
struct TraceStep {
    TraceKind kind;
    nlohmann::json payload;
};

void validate(const TraceStep& step);

// The chosen analog plus the full trace of how it was chosen.
struct AnalogyResult {
    std::string input_id;
    Method method = Method::DirectGen;
    Event analog;
    std::vector<TraceStep> trace;
};

// Checks the self-analogy exclusion (normalized titles differ) and that the
// trace ends with a Selection step naming the analog.
void validate(const AnalogyResult& result, const std::string& input_title);

nlohmann::json to_json(const Event& event);
nlohmann::json to_json(const DimensionalSummary& summary);
nlohmann::json to_json(const TraceStep& step);
nlohmann::json to_json(const AnalogyResult& result);

Event event_from_json(const nlohmann::json& j);
DimensionalSummary summary_from_json(const nlohmann::json& j);
GoldAnalogy gold_from_json(const nlohmann::json& j);
AnalogyResult result_from_json(const nlohmann::json& j);

// JSONL loaders. Errors carry the 1-based line number.
std::vector<Event> load_events_jsonl(const std::string& path);
std::vector<GoldAnalogy> load_gold_jsonl(const std::string& path);
void save_events_jsonl(const std::string& path, const std::vector<Event>& events);

}  // namespace analogist

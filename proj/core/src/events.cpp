#include "analogist/events.hpp"

#include "analogist/errors.hpp"
#include "analogist/text.hpp"

#include <fstream>
#include <set>

namespace analogist {

using nlohmann::json;

std::string to_string(Theme theme) {
    switch (theme) {
        case Theme::War: return "War";
        case Theme::Politics: return "Politics";
        case Theme::CultureAndSociety: return "CultureAndSociety";
        case Theme::Economy: return "Economy";
    }
    return "?";
}

std::optional<Theme> theme_from_string(const std::string& name) {
    std::string folded = text::normalize_title(name);
    if (folded == "war") return Theme::War;
    if (folded == "politics") return Theme::Politics;
    if (folded == "cultureandsociety" || folded == "culture and society")
        return Theme::CultureAndSociety;
    if (folded == "economy") return Theme::Economy;
    return std::nullopt;
}

std::string to_string(Method method) {
    switch (method) {
        case Method::DirectRetrieve: return "direct-retrieve";
        case Method::TwoStageRetrieve: return "two-stage-retrieve";
        case Method::DirectGen: return "direct-gen";
        case Method::TwoStageGen: return "two-stage-gen";
        case Method::SummarizeGen: return "summarize-gen";
        case Method::SelfReflect: return "self-reflect";
        case Method::RandomPool: return "random-pool";
        case Method::RandomTheme: return "random-theme";
        case Method::RandomCandidate: return "random-candidate";
    }
    return "?";
}

std::optional<Method> method_from_string(const std::string& name) {
    static const std::pair<const char*, Method> table[] = {
        {"direct-retrieve", Method::DirectRetrieve},
        {"two-stage-retrieve", Method::TwoStageRetrieve},
        {"direct-gen", Method::DirectGen},
        {"two-stage-gen", Method::TwoStageGen},
        {"summarize-gen", Method::SummarizeGen},
        {"self-reflect", Method::SelfReflect},
        {"random-pool", Method::RandomPool},
        {"random-theme", Method::RandomTheme},
        {"random-candidate", Method::RandomCandidate},
    };
    for (const auto& [key, value] : table)
        if (name == key) return value;
    return std::nullopt;
}

bool is_retrieval_method(Method method) {
    return method == Method::DirectRetrieve || method == Method::TwoStageRetrieve ||
           method == Method::RandomPool || method == Method::RandomTheme;
}

void validate(const Event& event) {
    if (text::trim(event.title).empty())
        throw SchemaError("event " + event.id + ": title is empty");
    if (event.description.empty())
        throw SchemaError("event " + event.id + ": description is empty");
    if (event.source == EventSource::Pool && !event.theme)
        throw SchemaError("event " + event.id + ": pool events must carry a theme");
}

std::string DimensionalSummary::to_text() const {
    return "Topic: " + topic + "\nBackground: " + background + "\nProcess: " + process +
           "\nResult: " + result;
}

void validate(const DimensionalSummary& summary) {
    auto check = [](const std::string& field, const char* name) {
        if (text::trim(field).empty())
            throw SchemaError(std::string("summary: ") + name + " is empty");
    };
    check(summary.topic, "topic");
    check(summary.background, "background");
    check(summary.process, "process");
    check(summary.result, "result");
}

void validate(const GoldAnalogy& gold) {
    validate(gold.input);
    if (gold.answers.empty())
        throw SchemaError("gold " + gold.input.id + ": answers list is empty");
    for (const auto& answer : gold.answers) {
        if (text::trim(answer.canonical).empty())
            throw SchemaError("gold " + gold.input.id + ": empty canonical title");
        std::set<std::string> seen;
        for (const auto& alias : answer.aliases) {
            if (!seen.insert(text::normalize_title(alias)).second)
                throw SchemaError("gold " + gold.input.id + ": duplicate alias '" + alias + "'");
        }
    }
}

std::string to_string(TraceKind kind) {
    switch (kind) {
        case TraceKind::Proposal: return "proposal";
        case TraceKind::Verification: return "verification";
        case TraceKind::Reflection: return "reflection";
        case TraceKind::Selection: return "selection";
        case TraceKind::Retrieval: return "retrieval";
    }
    return "?";
}

namespace {

std::optional<TraceKind> trace_kind_from_string(const std::string& name) {
    if (name == "proposal") return TraceKind::Proposal;
    if (name == "verification") return TraceKind::Verification;
    if (name == "reflection") return TraceKind::Reflection;
    if (name == "selection") return TraceKind::Selection;
    if (name == "retrieval") return TraceKind::Retrieval;
    return std::nullopt;
}

}  // namespace

void validate(const TraceStep& step) {
    if (!step.payload.is_object()) throw SchemaError("trace step: payload must be an object");
    switch (step.kind) {
        case TraceKind::Proposal:
            if (!step.payload.contains("proposed"))
                throw SchemaError("proposal step: missing 'proposed'");
            break;
        case TraceKind::Verification:
            if (!step.payload.contains("title") || !step.payload.contains("status"))
                throw SchemaError("verification step: missing 'title'/'status'");
            break;
        case TraceKind::Reflection:
            if (text::trim(step.payload.value("text", "")).empty())
                throw SchemaError("reflection step: empty text");
            break;
        case TraceKind::Selection:
            if (text::trim(step.payload.value("chosen", "")).empty())
                throw SchemaError("selection step: missing 'chosen'");
            break;
        case TraceKind::Retrieval:
            if (!step.payload.contains("ranking"))
                throw SchemaError("retrieval step: missing 'ranking'");
            break;
    }
}

void validate(const AnalogyResult& result, const std::string& input_title) {
    validate(result.analog);
    if (text::normalize_title(result.analog.title) == text::normalize_title(input_title))
        throw SchemaError("result for " + result.input_id +
                          ": analog equals the input event (self-analogy)");
    if (result.trace.empty())
        throw SchemaError("result for " + result.input_id + ": empty trace");
    const TraceStep& last = result.trace.back();
    if (last.kind != TraceKind::Selection)
        throw SchemaError("result for " + result.input_id + ": trace must end in a selection");
    if (text::normalize_title(last.payload.value("chosen", "")) !=
        text::normalize_title(result.analog.title))
        throw SchemaError("result for " + result.input_id +
                          ": final selection does not name the analog");
    for (const TraceStep& step : result.trace) validate(step);
}

json to_json(const Event& event) {
    json j{{"id", event.id}, {"title", event.title}, {"description", event.description}};
    if (event.theme) j["theme"] = to_string(*event.theme);
    switch (event.source) {
        case EventSource::Pool: j["source"] = "pool"; break;
        case EventSource::Generated: j["source"] = "generated"; break;
        case EventSource::Input: j["source"] = "input"; break;
    }
    if (event.page_id) j["page_id"] = *event.page_id;
    return j;
}

json to_json(const DimensionalSummary& summary) {
    return json{{"topic", summary.topic},
                {"background", summary.background},
                {"process", summary.process},
                {"result", summary.result}};
}

json to_json(const TraceStep& step) {
    return json{{"kind", to_string(step.kind)}, {"payload", step.payload}};
}

json to_json(const AnalogyResult& result) {
    json steps = json::array();
    for (const TraceStep& step : result.trace) steps.push_back(to_json(step));
    return json{{"input_id", result.input_id},
                {"method", to_string(result.method)},
                {"analog", to_json(result.analog)},
                {"trace", steps}};
}

Event event_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("event: expected a JSON object");
    Event event;
    if (!j.contains("id") || !j["id"].is_string()) throw SchemaError("event: missing field 'id'");
    if (!j.contains("title") || !j["title"].is_string())
        throw SchemaError("event: missing field 'title'");
    if (!j.contains("description") || !j["description"].is_string())
        throw SchemaError("event: missing field 'description'");
    event.id = j["id"].get<std::string>();
    event.title = j["title"].get<std::string>();
    event.description = j["description"].get<std::string>();
    if (j.contains("theme") && !j["theme"].is_null()) {
        auto theme = theme_from_string(j["theme"].get<std::string>());
        if (!theme)
            throw SchemaError("event " + event.id + ": unknown theme '" +
                              j["theme"].get<std::string>() + "'");
        event.theme = theme;
    }
    std::string source = j.value("source", "input");
    if (source == "pool") event.source = EventSource::Pool;
    else if (source == "generated") event.source = EventSource::Generated;
    else if (source == "input") event.source = EventSource::Input;
    else throw SchemaError("event " + event.id + ": unknown source '" + source + "'");
    if (j.contains("page_id") && !j["page_id"].is_null())
        event.page_id = j["page_id"].get<std::string>();
    return event;
}

DimensionalSummary summary_from_json(const json& j) {
    DimensionalSummary s;
    s.topic = j.at("topic").get<std::string>();
    s.background = j.at("background").get<std::string>();
    s.process = j.at("process").get<std::string>();
    s.result = j.at("result").get<std::string>();
    return s;
}

GoldAnalogy gold_from_json(const json& j) {
    GoldAnalogy gold;
    if (!j.contains("input")) throw SchemaError("gold: missing field 'input'");
    gold.input = event_from_json(j["input"]);
    if (!j.contains("answers") || !j["answers"].is_array())
        throw SchemaError("gold " + gold.input.id + ": missing field 'answers'");
    for (const auto& a : j["answers"]) {
        GoldAnswer answer;
        answer.canonical = a.at("canonical").get<std::string>();
        for (const auto& alias : a.value("aliases", json::array()))
            answer.aliases.push_back(alias.get<std::string>());
        gold.answers.push_back(std::move(answer));
    }
    validate(gold);
    return gold;
}

AnalogyResult result_from_json(const json& j) {
    AnalogyResult result;
    result.input_id = j.at("input_id").get<std::string>();
    auto method = method_from_string(j.at("method").get<std::string>());
    if (!method) throw SchemaError("result: unknown method");
    result.method = *method;
    result.analog = event_from_json(j.at("analog"));
    for (const auto& s : j.at("trace")) {
        auto kind = trace_kind_from_string(s.at("kind").get<std::string>());
        if (!kind) throw SchemaError("result: unknown trace kind");
        result.trace.push_back(TraceStep{*kind, s.at("payload")});
    }
    return result;
}

namespace {

template <typename Fn>
void for_each_jsonl_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            fn(j);
        } catch (const SchemaError& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const json::exception& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

std::vector<Event> load_events_jsonl(const std::string& path) {
    std::vector<Event> events;
    for_each_jsonl_line(path, [&](const json& j) {
        Event event = event_from_json(j);
        validate(event);
        events.push_back(std::move(event));
    });
    return events;
}

std::vector<GoldAnalogy> load_gold_jsonl(const std::string& path) {
    std::vector<GoldAnalogy> gold;
    for_each_jsonl_line(path, [&](const json& j) { gold.push_back(gold_from_json(j)); });
    return gold;
}

void save_events_jsonl(const std::string& path, const std::vector<Event>& events) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write " + path);
    for (const Event& event : events) out << to_json(event).dump() << '\n';
}

}  // namespace analogist

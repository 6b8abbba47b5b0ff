#include "analogist/prompts.hpp"

#include "analogist/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace analogist {

std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(tmpl.body.size());
    const std::string& body = tmpl.body;
    std::size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if (c != '{') {
            out += c;
            ++i;
            continue;
        }
        std::size_t close = body.find('}', i + 1);
        if (close == std::string::npos)
            throw UnboundPlaceholder("template '" + tmpl.name + "': unterminated '{'");
        std::string key = body.substr(i + 1, close - i - 1);
        auto it = bindings.find(key);
        if (it == bindings.end())
            throw UnboundPlaceholder("template '" + tmpl.name + "': unbound placeholder '{" +
                                     key + "}'");
        out += it->second;
        i = close + 1;
    }
    return out;
}

namespace {

struct DefaultEntry {
    const char* name;
    const char* system;
    const char* user;
};

const DefaultEntry kDefaults[] = {
    {prompt_names::kSummarize,
     "You are an event summary robot. For the event description input, please combine your "
     "knowledge and summarize it into four parts: topic, background, process and result. The "
     "summary should be concise, with each part consisting of only one sentence and no more "
     "than 100 words.",
     "Input Event: {title}\n{description}\nOutput:"},

    {prompt_names::kAbstractScore,
     "You are a sentence-level analogy-scoring robot. Given the two descriptions, please judge "
     "the quality of the analogy and give it a score (1-4). The quality of an analogy only "
     "focuses on the abstract-level similarity, rather than the literal similarity.\n"
     "Evaluation Criteria:\n"
     "1 point: The two descriptions belong to completely different topics or fields, have no "
     "connection, and cannot be compared.\n"
     "2 points: The two descriptions belong to the same general theme, but the specific "
     "situation or aspect they express is significantly different.\n"
     "3 points: The two descriptions belong to the same topic and express similar general "
     "situations, but differ somewhat in details or focus.\n"
     "4 points: The two descriptions pertain to the same topic, with the general situation "
     "expressed being highly similar, and the concepts and key points closely overlapping.",
     "{description_a}\n{description_b}\nScore:"},

    {prompt_names::kDirectGeneration,
     "You are a historical analogy bot. For input events, your goal is to find the most "
     "appropriate event to use for analogizing with the input.",
     "Input Event:\n{title}: {description}\nHistorical Analogies Events:"},

    {prompt_names::kProposeTwoStage,
     "You are a historical analogy candidate proposals robot. For input events, please consider "
     "the summary, background, process and results, output n historical events that are similar "
     "in many aspects above, and return them in list format.",
     "Input Event:\n{title}: {description}\nThe {n} historical events that are similar with "
     "input:"},

    {prompt_names::kSelect,
     "You are an analogy robot. For the input event and the historical event used for "
     "selection, your goal is to find the best event that can be used for analogies.",
     "Input Event:\n{title}: {description}\nOptional Historical Events:\n{candidates}\n"
     "Among the options, the most appropriate one to use as an analogy for {title} is"},

    {prompt_names::kProposeSelfReflect,
     "You're a robot for proposing historical analogies events. Historical Analogy is "
     "comparsion of a known past event or person with a contemporary but unfamiliar event or "
     "person in order to identify common aspects between the two. For input events, please "
     "consider the summary, background, process and results, and output {n} historical events "
     "that are similar in many aspects above, and return them in list format. If there is any "
     "reflection, please modify the recommended events based on the reflection.",
     "Input Event:\n{title}: {description}\n{reflections}The {n} historical events that are "
     "similar with input:"},

    {prompt_names::kReflect,
     "You are a historical analogy reflection robot. Historical Analogy is comparsion of a "
     "known past event or person with a contemporary but unfamiliar event or person in order "
     "to identify common aspects between the two. For the input event and the candidate event "
     "set, please make a comparison, reflect on the shortcomings of the candidate set, and "
     "make suggestions for obtaining a better analogous candidate set. Suggestions should be "
     "succinct and concise, with a single sentence indicating the direction of change for the "
     "candidate set.\n"
     "Respond with a Thought, then either a line starting with \"Reflection:\" followed by "
     "your one-sentence suggestion, or a line starting with \"Final Answer:\" followed by the "
     "name of the suitable candidate event.",
     "Input Event:\n{title}: {description}\nOptional Historical Events:\n{candidates}\nThought:"},
};

}  // namespace

PromptRegistry::PromptRegistry() {
    for (const DefaultEntry& entry : kDefaults)
        set(entry.name, entry.system, entry.user);
}

PromptRegistry PromptRegistry::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open prompt registry " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("prompt registry " + path + ": " + e.what());
    }
    PromptRegistry registry;
    for (const auto& [name, entry] : j.items()) {
        if (!entry.is_object() || !entry.contains("system") || !entry.contains("user"))
            throw SchemaError("prompt registry " + path + ": entry '" + name +
                              "' needs 'system' and 'user'");
        registry.set(name, entry["system"].get<std::string>(), entry["user"].get<std::string>());
    }
    return registry;
}

const PromptTemplate& PromptRegistry::system(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown prompt template '" + name + "'");
    return it->second.first;
}

const PromptTemplate& PromptRegistry::user(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown prompt template '" + name + "'");
    return it->second.second;
}

void PromptRegistry::set(const std::string& name, std::string system_body, std::string user_body) {
    entries_[name] = {PromptTemplate{name + ".system", std::move(system_body)},
                      PromptTemplate{name + ".user", std::move(user_body)}};
}

std::vector<std::string> PromptRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

}  // namespace analogist

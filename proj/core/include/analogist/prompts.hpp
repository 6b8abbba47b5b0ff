#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace analogist {

// A named prompt body with {placeholder} slots. Rendering is deterministic;
// an unbound placeholder raises instead of leaking braces into the prompt.
struct PromptTemplate {
    std::string name;
    std::string body;
};

std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings);

// All prompts used by the pipelines and the judge. Each entry is a
// system/user template pair. Defaults are compiled in; a registry file can
// override any subset so prompts can be varied without rebuilding.
class PromptRegistry {
public:
    // Built-in defaults.
    PromptRegistry();

    // Defaults overlaid with entries from a JSON registry file:
    //   {"<name>": {"system": "...", "user": "..."}, ...}
    static PromptRegistry from_file(const std::string& path);

    const PromptTemplate& system(const std::string& name) const;
    const PromptTemplate& user(const std::string& name) const;

    void set(const std::string& name, std::string system_body, std::string user_body);

    // Registered template names, sorted.
    std::vector<std::string> names() const;

private:
    std::map<std::string, std::pair<PromptTemplate, PromptTemplate>> entries_;
};

// Template names understood by the pipelines.
namespace prompt_names {
inline constexpr const char* kSummarize = "summarize_dimensions";
inline constexpr const char* kAbstractScore = "abstract_score";
inline constexpr const char* kDirectGeneration = "direct_generation";
inline constexpr const char* kProposeTwoStage = "propose_two_stage";
inline constexpr const char* kSelect = "select";
inline constexpr const char* kProposeSelfReflect = "propose_self_reflect";
inline constexpr const char* kReflect = "reflect";
}  // namespace prompt_names

}  // namespace analogist

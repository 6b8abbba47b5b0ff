#pragma once

#include "analogist/gateway.hpp"

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace analogist::testing {

// Deterministic chat backend for tests and fixture generation. Rules are
// checked in registration order; the first match answers. A request no rule
// covers throws, so unscripted model traffic fails loudly.
class ScriptedBackend : public ChatBackend {
public:
    using Matcher = std::function<bool(const CompletionRequest&)>;
    using Responder = std::function<std::string(const CompletionRequest&)>;

    ScriptedBackend& on(Matcher matcher, Responder responder);

    // Match when the system prompt contains `system_needle` and the user
    // prompt contains `user_needle` (empty needles match everything).
    ScriptedBackend& on_contains(const std::string& system_needle, const std::string& user_needle,
                                 std::string response);
    ScriptedBackend& on_contains(const std::string& system_needle, const std::string& user_needle,
                                 Responder responder);

    std::string complete(const CompletionRequest& request) override;

    std::size_t calls() const { return calls_.load(); }

private:
    struct Rule {
        Matcher matcher;
        Responder responder;
    };
    std::vector<Rule> rules_;
    std::atomic<std::size_t> calls_{0};
    std::mutex mutex_;
};

// Case-sensitive substring matcher over (system, user) prompts.
ScriptedBackend::Matcher contains(std::string system_needle, std::string user_needle);

// A deterministic four-part summary of the given event text, in the exact
// shape the summary parser expects. Shared by scripted summarize responders.
std::string formulaic_summary(const std::string& title, const std::string& description);

// Deterministic 1-4 score derived from the score-prompt content.
int formulaic_score(const std::string& user_prompt);

}  // namespace analogist::testing

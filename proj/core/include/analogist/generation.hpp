#pragma once

#include "analogist/evaluation.hpp"
#include "analogist/events.hpp"
#include "analogist/gateway.hpp"
#include "analogist/retrieval.hpp"
#include "analogist/wiki.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace analogist {

enum class RejectReason { NotFound, Ambiguous, SelfMatch, Transport };

std::string to_string(RejectReason reason);

// One proposal round after verification. Every proposed title lands either in
// verified (as a Generated event described by its encyclopedia extract) or in
// rejected with a reason.
struct CandidateSet {
    int round = 1;
    std::vector<std::string> proposed;
    std::vector<Event> verified;
    std::vector<std::string> verified_from;  // the proposal text behind each verified event
    std::vector<std::pair<std::string, RejectReason>> rejected;
    bool refilled = false;
};

void validate(const CandidateSet& set);
nlohmann::json to_json(const CandidateSet& set);

struct ReflectionNote {
    int round = 0;
    std::string thought;
    std::string directive;  // one-sentence revision instruction
};

nlohmann::json to_json(const ReflectionNote& note);

struct ReflectionConfig {
    int candidates_per_round = 5;  // C
    int warmup_rounds = 0;         // W: rounds whose acceptance is ignored
    int max_rounds = 5;
};

void validate(const ReflectionConfig& config);

// Everything a generation pipeline talks to.
struct GenerationContext {
    Gateway& gateway;
    Verifier& verifier;
    const PromptRegistry& prompts;
};

inline constexpr int kProposalRetryBudget = 3;
inline constexpr int kDirectGenRetryBudget = 3;
inline constexpr int kReflectorRetryBudget = 3;

// The reflector speaks one of two shapes: "Reflection: <suggestion>" or
// "Final Answer: <candidate name>" (the payload may sit on the next line).
struct ReflectorOutput {
    enum class Kind { Reflection, FinalAnswer };
    Kind kind = Kind::Reflection;
    std::string thought;  // text before the marker; may be empty
    std::string text;     // suggestion or candidate name
};

// Throws ParseError when neither marker is present or the payload is empty.
ReflectorOutput parse_reflector(const std::string& response);

// Extracts the single event title a direct-generation response names.
std::string parse_single_title(const std::string& response);

// One completion, answer verified; unverifiable answers retried with an
// appended reminder up to the budget. Throws ExhaustedRetries.
AnalogyResult direct_generate(const Event& input, GenerationContext ctx);

// Renders the proposal template (template_name) with {description} (and the
// reflections/round state for the self-reflection variant), parses the list,
// verifies every title, and refills once when verification leaves fewer than
// min(2, n) candidates. Throws ParseError (after retries) / EmptyRound.
CandidateSet propose_candidates(const Event& input, const std::string& description_for_prompt,
                                int n, const std::vector<ReflectionNote>& reflections,
                                GenerationContext ctx, const std::string& template_name,
                                int round, std::vector<TraceStep>& trace);

// Selection-prompt choice among the verified candidates. descriptions may be
// the events' own descriptions or dimension summaries. Appends the Selection
// trace step; single candidate short-circuits without a model call.
Event select_from_candidates(const Event& input, const std::string& input_description,
                             const CandidateSet& candidates,
                             const std::vector<std::string>& descriptions, GenerationContext ctx,
                             std::vector<TraceStep>& trace);

// propose(n=10) then select, both over raw descriptions.
AnalogyResult two_stage_generate(const Event& input, GenerationContext ctx);

// Summaries replace descriptions on both sides of the selection.
AnalogyResult summarize_then_generate(const Event& input, GenerationContext ctx);

// Candidate Generator + Answer Reflector loop over the input's
// four-dimension summary. See ReflectionConfig for the knobs.
AnalogyResult self_reflect_generate(const Event& input, const ReflectionConfig& config,
                                    GenerationContext ctx);

// Seeded uniform draw over [0, n). Rejection sampling over the raw engine so
// every platform draws the same sequence (std::uniform_int_distribution is
// implementation-defined).
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// Figure-5-style ablations. Pool/Theme need a pool (Theme also an input
// theme); Candidate proposes 10 candidates and draws among the verified ones.
AnalogyResult random_baseline(const Event& input, Method method, const EventPool* pool,
                              std::uint64_t seed, GenerationContext* ctx);

}  // namespace analogist

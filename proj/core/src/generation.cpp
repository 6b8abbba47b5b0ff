#include "analogist/generation.hpp"

#include "analogist/text.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <map>
#include <unordered_set>

namespace analogist {

using nlohmann::json;

std::string to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::NotFound: return "not-found";
        case RejectReason::Ambiguous: return "ambiguous";
        case RejectReason::SelfMatch: return "self-match";
        case RejectReason::Transport: return "transport";
    }
    return "?";
}

void validate(const CandidateSet& set) {
    if (set.round < 1) throw SchemaError("candidate set: round must be >= 1");
    if (set.verified.size() != set.verified_from.size())
        throw SchemaError("candidate set: verified/verified_from length mismatch");
    // Every proposal must be dispositioned.
    for (const std::string& title : set.proposed) {
        bool found = std::any_of(set.verified_from.begin(), set.verified_from.end(),
                                 [&](const std::string& t) { return t == title; }) ||
                     std::any_of(set.rejected.begin(), set.rejected.end(),
                                 [&](const auto& r) { return r.first == title; });
        if (!found)
            throw SchemaError("candidate set: proposal '" + title + "' was never dispositioned");
    }
    for (const Event& event : set.verified) {
        validate(event);
        if (event.source != EventSource::Generated)
            throw SchemaError("candidate set: verified event '" + event.title +
                              "' is not marked generated");
    }
}

json to_json(const CandidateSet& set) {
    json verified = json::array();
    for (std::size_t i = 0; i < set.verified.size(); ++i)
        verified.push_back({{"title", set.verified[i].title},
                            {"proposed_as", set.verified_from[i]},
                            {"page_id", set.verified[i].page_id.value_or("")}});
    json rejected = json::array();
    for (const auto& [title, reason] : set.rejected)
        rejected.push_back({{"title", title}, {"reason", to_string(reason)}});
    return json{{"round", set.round},
                {"proposed", set.proposed},
                {"verified", verified},
                {"rejected", rejected},
                {"refilled", set.refilled}};
}

json to_json(const ReflectionNote& note) {
    return json{{"round", note.round}, {"thought", note.thought}, {"directive", note.directive}};
}

void validate(const ReflectionConfig& config) {
    if (config.candidates_per_round < 1)
        throw ConfigError("candidates-per-round must be >= 1");
    if (config.warmup_rounds < 0) throw ConfigError("warmup rounds must be >= 0");
    if (config.max_rounds < 1) throw ConfigError("max-rounds must be >= 1");
    if (config.warmup_rounds >= config.max_rounds)
        throw ConfigError("warmup rounds must be smaller than max-rounds");
}

// ---------------------------------------------------------------------------
// Response parsing

std::string parse_single_title(const std::string& response) {
    std::string title;
    for (const std::string& raw : text::split_lines(response)) {
        std::string line = text::trim(raw);
        if (line.empty()) continue;
        // A lone echoed header ("Historical Analogies Events:") is not an answer.
        if (line.back() == ':' && title.empty()) continue;
        title = line;
        break;
    }
    // Strip list markup and quoting the model may add around the title.
    while (!title.empty() && (title.front() == '-' || title.front() == '*' ||
                              title.front() == '"' || title.front() == '\''))
        title.erase(title.begin());
    while (!title.empty() && (title.back() == '.' || title.back() == '"' ||
                              title.back() == '\''))
        title.pop_back();
    title = text::trim(title);
    if (title.empty()) throw ParseError("no event title in generation response");
    return title;
}

ReflectorOutput parse_reflector(const std::string& response) {
    auto payload_after = [&](std::size_t marker_end) -> std::string {
        std::size_t eol = response.find('\n', marker_end);
        std::string rest = text::trim(response.substr(
            marker_end, eol == std::string::npos ? std::string::npos : eol - marker_end));
        if (!rest.empty()) return rest;
        // Listing shape "Final Answer:\nSpanish flu": payload on the next line.
        if (eol == std::string::npos) return {};
        for (const std::string& line : text::split_lines(response.substr(eol + 1))) {
            std::string trimmed = text::trim(line);
            if (!trimmed.empty()) return trimmed;
        }
        return {};
    };

    ReflectorOutput out;
    std::size_t final_pos = text::ifind(response, "final answer:");
    std::size_t reflect_pos = text::ifind(response, "reflection:");
    if (final_pos == std::string::npos && reflect_pos == std::string::npos)
        throw ParseError("reflector response has neither 'Reflection:' nor 'Final Answer:'");

    // An explicit final answer wins over reflective preamble.
    if (final_pos != std::string::npos) {
        out.kind = ReflectorOutput::Kind::FinalAnswer;
        out.thought = text::trim(response.substr(0, final_pos));
        out.text = payload_after(final_pos + std::strlen("final answer:"));
    } else {
        out.kind = ReflectorOutput::Kind::Reflection;
        out.thought = text::trim(response.substr(0, reflect_pos));
        out.text = payload_after(reflect_pos + std::strlen("reflection:"));
    }
    if (out.text.empty()) throw ParseError("reflector marker carries no payload");
    return out;
}

// ---------------------------------------------------------------------------
// Shared machinery

namespace {

std::string clean_extract(const std::string& extract) {
    return truncate_paragraphs(strip_reference_markers(extract), 5);
}

// Appended on retries; the attempt counter keeps the cache key distinct so a
// rejected answer is never replayed back at us.
std::string retry_tag(int attempt) {
    return "\n(Attempt " + std::to_string(attempt) + ")";
}

struct Disposition {
    std::optional<Event> event;            // set when verified
    std::optional<RejectReason> rejection;  // set otherwise
    std::string canonical;                  // for the trace
};

Disposition disposition_for(const Event& input, const std::string& title,
                            GenerationContext& ctx) {
    Disposition d;
    std::string input_norm = text::normalize_title(input.title);
    if (text::normalize_title(title) == input_norm) {
        d.rejection = RejectReason::SelfMatch;
        return d;
    }
    VerificationVerdict verdict;
    try {
        verdict = ctx.verifier.verify(title);
    } catch (const TransportError&) {
        // Treated as unusable this round, but logged distinctly from NotFound.
        d.rejection = RejectReason::Transport;
        return d;
    }
    switch (verdict.status) {
        case VerifyStatus::NotFound:
            d.rejection = RejectReason::NotFound;
            return d;
        case VerifyStatus::Ambiguous:
            d.rejection = RejectReason::Ambiguous;
            d.canonical = verdict.canonical_title.value_or("");
            return d;
        case VerifyStatus::Verified:
            break;
    }
    d.canonical = *verdict.canonical_title;
    if (text::normalize_title(d.canonical) == input_norm) {
        // The proposal is a redirect to the input event itself.
        d.rejection = RejectReason::SelfMatch;
        return d;
    }
    Event event;
    event.id = "wiki:" + *verdict.page_id;
    event.title = d.canonical;
    event.description = clean_extract(*verdict.extract);
    event.source = EventSource::Generated;
    event.page_id = verdict.page_id;
    d.event = std::move(event);
    return d;
}

void disposition_into(CandidateSet& set, const Event& input, const std::string& title,
                      GenerationContext& ctx, std::vector<TraceStep>& trace) {
    Disposition d = disposition_for(input, title, ctx);
    json payload{{"title", title}};
    if (d.event) {
        payload["status"] = "verified";
        payload["canonical"] = d.event->title;
        set.verified.push_back(*d.event);
        set.verified_from.push_back(title);
    } else {
        payload["status"] = to_string(*d.rejection);
        if (!d.canonical.empty()) payload["canonical"] = d.canonical;
        set.rejected.emplace_back(title, *d.rejection);
    }
    trace.push_back(TraceStep{TraceKind::Verification, std::move(payload)});
}

std::string format_reflections(const std::vector<ReflectionNote>& notes) {
    std::string block;
    for (const ReflectionNote& note : notes) block += "Reflection: " + note.directive + "\n";
    return block;
}

std::string candidate_listing(const std::vector<Event>& events,
                              const std::vector<std::string>& descriptions) {
    std::string listing;
    for (std::size_t i = 0; i < events.size(); ++i)
        listing += std::to_string(i + 1) + ". " + events[i].title + ": " + descriptions[i] + "\n";
    return listing;
}

}  // namespace

// ---------------------------------------------------------------------------
// Direct generation

AnalogyResult direct_generate(const Event& input, GenerationContext ctx) {
    AnalogyResult result;
    result.input_id = input.id;
    result.method = Method::DirectGen;

    std::map<std::string, std::string> bindings{{"title", input.title},
                                                {"description", input.description}};
    std::string system = render(ctx.prompts.system(prompt_names::kDirectGeneration), bindings);
    std::string base_user = render(ctx.prompts.user(prompt_names::kDirectGeneration), bindings);

    std::vector<std::string> rejected;
    for (int attempt = 1; attempt <= kDirectGenRetryBudget; ++attempt) {
        std::string user = base_user;
        if (!rejected.empty()) {
            user += "\nThese answers were rejected because they could not be verified as real "
                    "historical events distinct from the input:";
            for (const std::string& r : rejected) user += " " + r + ";";
            user += " the event must be real and distinct." + retry_tag(attempt);
        }
        std::string response = ctx.gateway.complete(ctx.gateway.chat_request(system, user));

        std::string title;
        try {
            title = parse_single_title(response);
        } catch (const ParseError&) {
            if (attempt == kDirectGenRetryBudget) throw;
            rejected.push_back("(unparseable answer)");
            continue;
        }
        result.trace.push_back(TraceStep{
            TraceKind::Proposal,
            json{{"proposed", json::array({title})}, {"attempt", attempt}, {"response", response}}});

        CandidateSet probe;
        probe.round = attempt;
        disposition_into(probe, input, title, ctx, result.trace);
        if (!probe.verified.empty()) {
            result.analog = probe.verified.front();
            result.trace.push_back(TraceStep{
                TraceKind::Selection, json{{"chosen", result.analog.title},
                                           {"via", "direct-generation"},
                                           {"attempts", attempt}}});
            validate(result, input.title);
            return result;
        }
        rejected.push_back(title);
    }
    throw ExhaustedRetries("direct generation: no verifiable analog for '" + input.title +
                           "' in " + std::to_string(kDirectGenRetryBudget) + " attempts");
}

// ---------------------------------------------------------------------------
// Candidate proposal + selection

CandidateSet propose_candidates(const Event& input, const std::string& description_for_prompt,
                                int n, const std::vector<ReflectionNote>& reflections,
                                GenerationContext ctx, const std::string& template_name,
                                int round, std::vector<TraceStep>& trace) {
    if (n < 1) throw ConfigError("propose_candidates: n must be >= 1");

    std::map<std::string, std::string> bindings{{"title", input.title},
                                                {"description", description_for_prompt},
                                                {"n", std::to_string(n)},
                                                {"reflections", format_reflections(reflections)}};
    std::string system = render(ctx.prompts.system(template_name), bindings);
    std::string base_user = render(ctx.prompts.user(template_name), bindings);

    std::vector<std::string> proposed;
    std::string raw_response;
    for (int attempt = 1;; ++attempt) {
        std::string user = base_user;
        if (attempt > 1)
            user += "\nReturn the events in list format, e.g. [\"Event A\", \"Event B\"]." +
                    retry_tag(attempt);
        raw_response = ctx.gateway.complete(ctx.gateway.chat_request(system, user));
        try {
            proposed = parse_candidate_list(raw_response);
            break;
        } catch (const ParseError&) {
            if (attempt >= kProposalRetryBudget) throw;
        }
    }

    CandidateSet set;
    set.round = round;
    set.proposed = proposed;
    trace.push_back(TraceStep{TraceKind::Proposal, json{{"proposed", proposed},
                                                        {"round", round},
                                                        {"response", raw_response}}});
    for (const std::string& title : proposed)
        disposition_into(set, input, title, ctx, trace);

    std::size_t quorum = std::min<std::size_t>(2, static_cast<std::size_t>(n));
    if (set.verified.size() < quorum) {
        // One refill pass asking for replacements of the rejected titles.
        set.refilled = true;
        std::string rejected_list;
        for (const auto& [title, reason] : set.rejected) {
            if (!rejected_list.empty()) rejected_list += ", ";
            rejected_list += "\"" + title + "\"";
        }
        std::string refill_user =
            base_user +
            "\nThe following candidates were rejected because they could not be verified as "
            "real, unambiguous historical events distinct from the input: [" +
            rejected_list + "]. Propose " + std::to_string(n) +
            " different events that are real and distinct, and return them in list format.";
        try {
            std::string refill_response =
                ctx.gateway.complete(ctx.gateway.chat_request(system, refill_user));
            std::vector<std::string> refill = parse_candidate_list(refill_response);
            trace.push_back(TraceStep{TraceKind::Proposal, json{{"proposed", refill},
                                                                {"round", round},
                                                                {"refill", true},
                                                                {"response", refill_response}}});
            std::unordered_set<std::string> seen(set.proposed.begin(), set.proposed.end());
            for (const std::string& title : refill) {
                if (!seen.insert(title).second) continue;  // already dispositioned
                set.proposed.push_back(title);
                disposition_into(set, input, title, ctx, trace);
            }
        } catch (const ParseError&) {
            // Refill is best-effort; the round stands on whatever verified.
        }
    }

    if (set.verified.empty())
        throw EmptyRound("round " + std::to_string(round) + ": no proposal verified");
    validate(set);
    return set;
}

Event select_from_candidates(const Event& input, const std::string& input_description,
                             const CandidateSet& candidates,
                             const std::vector<std::string>& descriptions, GenerationContext ctx,
                             std::vector<TraceStep>& trace) {
    if (candidates.verified.empty())
        throw ConfigError("select_from_candidates: no verified candidates");
    if (descriptions.size() != candidates.verified.size())
        throw ConfigError("select_from_candidates: description count mismatch");

    if (candidates.verified.size() == 1) {
        const Event& only = candidates.verified.front();
        trace.push_back(TraceStep{TraceKind::Selection,
                                  json{{"chosen", only.title}, {"via", "single-candidate"}}});
        return only;
    }

    SelectionOutcome outcome = run_selection(input, input_description, candidates.verified,
                                             descriptions, ctx.gateway, ctx.prompts);
    std::size_t index = outcome.index;
    std::string via = outcome.fallback ? "fallback-first-verified" : "model-choice";
    if (outcome.fallback) {
        // The model may have echoed the proposal-side title rather than the
        // canonical one; honor that before falling back.
        if (auto proposed = match_selection(outcome.response, candidates.verified_from)) {
            index = *proposed;
            via = "model-choice-proposed-title";
            outcome.fallback = false;
        }
    }
    const Event& chosen = candidates.verified[index];
    trace.push_back(TraceStep{TraceKind::Selection, json{{"chosen", chosen.title},
                                                         {"via", via},
                                                         {"fallback", outcome.fallback},
                                                         {"response", outcome.response}}});
    return chosen;
}

// ---------------------------------------------------------------------------
// Two-stage generation

AnalogyResult two_stage_generate(const Event& input, GenerationContext ctx) {
    AnalogyResult result;
    result.input_id = input.id;
    result.method = Method::TwoStageGen;

    CandidateSet set = propose_candidates(input, input.description, 10, {}, ctx,
                                          prompt_names::kProposeTwoStage, 1, result.trace);
    std::vector<std::string> descriptions;
    for (const Event& event : set.verified) descriptions.push_back(event.description);
    result.analog =
        select_from_candidates(input, input.description, set, descriptions, ctx, result.trace);
    validate(result, input.title);
    return result;
}

// ---------------------------------------------------------------------------
// Summarize-then-generate

namespace {

void trace_summary(std::vector<TraceStep>& trace, const std::string& event_title,
                   const DimensionalSummary& summary) {
    trace.push_back(TraceStep{TraceKind::Reflection, json{{"stage", "summary"},
                                                          {"event", event_title},
                                                          {"text", summary.to_text()}}});
}

}  // namespace

AnalogyResult summarize_then_generate(const Event& input, GenerationContext ctx) {
    AnalogyResult result;
    result.input_id = input.id;
    result.method = Method::SummarizeGen;

    Judge judge(ctx.gateway, ctx.prompts);
    DimensionalSummary input_summary = judge.summarize(input);
    trace_summary(result.trace, input.title, input_summary);

    CandidateSet set = propose_candidates(input, input_summary.to_text(), 10, {}, ctx,
                                          prompt_names::kProposeTwoStage, 1, result.trace);

    // Re-describe each verified candidate by its own four-dimension summary;
    // a candidate whose summary never parses is dropped, not defaulted.
    CandidateSet summarized;
    summarized.round = set.round;
    summarized.proposed = set.proposed;
    summarized.rejected = set.rejected;
    summarized.refilled = set.refilled;
    std::vector<std::string> descriptions;
    for (std::size_t i = 0; i < set.verified.size(); ++i) {
        const Event& candidate = set.verified[i];
        try {
            DimensionalSummary summary =
                judge.summarize_description(candidate.title, candidate.description);
            trace_summary(result.trace, candidate.title, summary);
            summarized.verified.push_back(candidate);
            summarized.verified_from.push_back(set.verified_from[i]);
            descriptions.push_back(summary.to_text());
        } catch (const ParseError&) {
            summarized.rejected.emplace_back(set.verified_from[i], RejectReason::NotFound);
            result.trace.push_back(TraceStep{
                TraceKind::Verification,
                json{{"title", candidate.title}, {"status", "summary-failed"}}});
        }
    }
    if (summarized.verified.empty())
        throw EmptyRound("summarize-generate: every candidate summary failed");

    result.analog = select_from_candidates(input, input_summary.to_text(), summarized,
                                           descriptions, ctx, result.trace);
    validate(result, input.title);
    return result;
}

// ---------------------------------------------------------------------------
// Self-reflection

AnalogyResult self_reflect_generate(const Event& input, const ReflectionConfig& config,
                                    GenerationContext ctx) {
    validate(config);
    AnalogyResult result;
    result.input_id = input.id;
    result.method = Method::SelfReflect;

    Judge judge(ctx.gateway, ctx.prompts);
    DimensionalSummary input_summary = judge.summarize(input);
    trace_summary(result.trace, input.title, input_summary);
    std::string description = input_summary.to_text();

    std::vector<ReflectionNote> notes;
    std::vector<Event> all_verified;
    std::vector<std::string> all_verified_from;

    for (int round = 1; round <= config.max_rounds; ++round) {
        CandidateSet set;
        try {
            set = propose_candidates(input, description, config.candidates_per_round, notes, ctx,
                                     prompt_names::kProposeSelfReflect, round, result.trace);
        } catch (const EmptyRound&) {
            continue;  // tolerated per round; the loop cap bounds us
        }
        for (std::size_t i = 0; i < set.verified.size(); ++i) {
            all_verified.push_back(set.verified[i]);
            all_verified_from.push_back(set.verified_from[i]);
        }

        // Ask the reflector to accept one candidate or demand a better set.
        std::vector<std::string> descriptions;
        std::vector<std::string> titles;
        for (const Event& event : set.verified) {
            descriptions.push_back(event.description);
            titles.push_back(event.title);
        }
        std::map<std::string, std::string> bindings{
            {"title", input.title},
            {"description", description},
            {"candidates", candidate_listing(set.verified, descriptions)}};
        std::string system = render(ctx.prompts.system(prompt_names::kReflect), bindings);
        std::string base_user = render(ctx.prompts.user(prompt_names::kReflect), bindings);

        bool warmup = round <= config.warmup_rounds;
        std::optional<ReflectorOutput> output;
        std::string demand;
        for (int attempt = 1; attempt <= kReflectorRetryBudget; ++attempt) {
            std::string user = base_user;
            if (!demand.empty()) user += "\n" + demand + retry_tag(attempt);
            std::string response = ctx.gateway.complete(ctx.gateway.judge_request(system, user));

            ReflectorOutput parsed;
            try {
                parsed = parse_reflector(response);
            } catch (const ParseError&) {
                demand = "Respond with either \"Reflection: <one-sentence suggestion>\" or "
                         "\"Final Answer: <candidate event name>\".";
                continue;
            }
            if (parsed.kind == ReflectorOutput::Kind::FinalAnswer) {
                std::optional<std::size_t> picked = match_selection(parsed.text, titles);
                if (!picked) picked = match_selection(parsed.text, set.verified_from);
                if (!picked) {
                    demand = "The Final Answer must name one of the optional historical events.";
                    continue;
                }
                if (warmup) {
                    // Warm-up: acceptance is ignored and a reflection demanded.
                    result.trace.push_back(TraceStep{
                        TraceKind::Reflection,
                        json{{"stage", "warmup-accept-ignored"},
                             {"round", round},
                             {"text", parsed.text}}});
                    demand = "This is a warm-up round: do not give a Final Answer yet. Reflect "
                             "on the shortcomings of the candidate set instead.";
                    continue;
                }
                parsed.text = set.verified[*picked].title;
                output = parsed;
                break;
            }
            output = parsed;  // a reflection
            break;
        }

        if (!output) {
            // Reflector never produced a usable shape; move on without a new
            // note (recorded so the trace explains the silent round).
            result.trace.push_back(TraceStep{
                TraceKind::Reflection,
                json{{"stage", warmup ? "warmup-persistent-accept" : "reflector-unusable"},
                     {"round", round},
                     {"text", "no usable reflector output this round"}}});
            continue;
        }

        if (output->kind == ReflectorOutput::Kind::FinalAnswer) {
            const Event* chosen = nullptr;
            for (const Event& event : set.verified)
                if (event.title == output->text) chosen = &event;
            result.analog = *chosen;
            result.trace.push_back(TraceStep{TraceKind::Reflection,
                                             json{{"stage", "final-answer"},
                                                  {"round", round},
                                                  {"text", output->text},
                                                  {"thought", output->thought}}});
            result.trace.push_back(TraceStep{TraceKind::Selection,
                                             json{{"chosen", result.analog.title},
                                                  {"via", "reflector-final-answer"},
                                                  {"round", round}}});
            validate(result, input.title);
            return result;
        }

        ReflectionNote note;
        note.round = round;
        note.thought = output->thought;
        note.directive = output->text;
        notes.push_back(note);
        result.trace.push_back(TraceStep{TraceKind::Reflection,
                                         json{{"stage", "reflection"},
                                              {"round", round},
                                              {"text", note.directive},
                                              {"thought", note.thought}}});
    }

    // Loop cap expired: forced selection over everything verified so far.
    CandidateSet pooled;
    pooled.round = config.max_rounds;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < all_verified.size(); ++i) {
        std::string key = all_verified[i].page_id
                              ? *all_verified[i].page_id
                              : text::normalize_title(all_verified[i].title);
        if (!seen.insert(key).second) continue;
        pooled.verified.push_back(all_verified[i]);
        pooled.verified_from.push_back(all_verified_from[i]);
    }
    if (pooled.verified.empty())
        throw ExhaustedRetries("self-reflection: every round ended without verified candidates");

    std::vector<std::string> descriptions;
    for (const Event& event : pooled.verified) descriptions.push_back(event.description);
    result.trace.push_back(TraceStep{
        TraceKind::Reflection,
        json{{"stage", "forced-termination"},
             {"round", config.max_rounds},
             {"text", "max rounds reached; selecting over all verified candidates"}}});
    result.analog =
        select_from_candidates(input, description, pooled, descriptions, ctx, result.trace);
    validate(result, input.title);
    return result;
}

// ---------------------------------------------------------------------------
// Random baselines

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    if (n == 0) throw ConfigError("uniform_index over an empty range");
    if (n == 1) return 0;
    // Rejection sampling keeps the draw exactly uniform and the sequence
    // identical on every platform.
    std::uint64_t span = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t limit = span - span % static_cast<std::uint64_t>(n);
    for (;;) {
        std::uint64_t v = rng();
        if (v < limit) return static_cast<std::size_t>(v % n);
    }
}

AnalogyResult random_baseline(const Event& input, Method method, const EventPool* pool,
                              std::uint64_t seed, GenerationContext* ctx) {
    AnalogyResult result;
    result.input_id = input.id;
    result.method = method;
    std::mt19937_64 rng(seed);
    std::string self = text::normalize_title(input.title);

    auto choose = [&](const std::vector<Event>& domain, const char* via) {
        if (domain.empty())
            throw EmptyDomain(std::string(via) + ": nothing to draw from after self-exclusion");
        const Event& chosen = domain[uniform_index(rng, domain.size())];
        result.analog = chosen;
        result.trace.push_back(TraceStep{TraceKind::Selection,
                                         json{{"chosen", chosen.title},
                                              {"via", via},
                                              {"seed", seed},
                                              {"domain_size", domain.size()}}});
    };

    switch (method) {
        case Method::RandomPool: {
            if (!pool) throw ConfigError("random-pool needs an event pool");
            std::vector<Event> domain;
            for (const Event& event : pool->events)
                if (text::normalize_title(event.title) != self) domain.push_back(event);
            choose(domain, "random-pool");
            break;
        }
        case Method::RandomTheme: {
            if (!pool) throw ConfigError("random-theme needs an event pool");
            if (!input.theme) throw ConfigError("random-theme needs the input's theme");
            std::vector<Event> domain;
            auto it = pool->by_theme.find(*input.theme);
            if (it != pool->by_theme.end())
                for (std::size_t index : it->second) {
                    const Event& event = pool->events[index];
                    if (text::normalize_title(event.title) != self) domain.push_back(event);
                }
            choose(domain, "random-theme");
            break;
        }
        case Method::RandomCandidate: {
            if (!ctx) throw ConfigError("random-candidate needs a generation context");
            CandidateSet set = propose_candidates(input, input.description, 10, {}, *ctx,
                                                  prompt_names::kProposeTwoStage, 1, result.trace);
            choose(set.verified, "random-candidate");
            break;
        }
        default:
            throw ConfigError("random_baseline: '" + to_string(method) +
                              "' is not a random baseline");
    }
    validate(result, input.title);
    return result;
}

}  // namespace analogist

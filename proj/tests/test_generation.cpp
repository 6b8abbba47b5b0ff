#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "analogist/errors.hpp"
#include "analogist/generation.hpp"

#include "scripted.hpp"

#include <chrono>
#include <memory>
#include <random>
#include <string>
#include <vector>

using namespace analogist;
using analogist::testing::ScriptedBackend;
using analogist::testing::contains;

namespace {

constexpr const char* kProposeNeedle = "candidate proposals robot";
constexpr const char* kSelfReflectNeedle = "proposing historical analogies events";
constexpr const char* kReflectNeedle = "analogy reflection robot";
constexpr const char* kSelectNeedle = "an analogy robot";
constexpr const char* kSummarizeNeedle = "event summary robot";
constexpr const char* kDirectGenNeedle = "historical analogy bot";

std::shared_ptr<FixtureWikiSource> gen_wiki() {
    auto wiki = std::make_shared<FixtureWikiSource>();
    wiki->add_page(WikiPage{"Spanish flu", "101",
                            "The Spanish flu was an influenza pandemic beginning in 1918.", false},
                   {"The Spanish Flu", "1918 influenza pandemic"});
    wiki->add_page(WikiPage{"Tulip mania", "102",
                            "Tulip mania was a speculative bubble in the Dutch Golden Age.",
                            false});
    wiki->add_page(WikiPage{"Black Death", "103",
                            "The Black Death was a bubonic plague pandemic in the 1340s.", false});
    wiki->add_page(WikiPage{"Mercury", "104", "", true});  // disambiguation
    wiki->add_page(WikiPage{"COVID-19 pandemic", "105",
                            "A global pandemic caused by a novel coronavirus.", false},
                   {"Global coronavirus outbreak"});
    return wiki;
}

// A gateway + fixture verifier + default prompts, everything a generation
// pipeline needs. The backend pointer stays valid for scripting assertions.
struct Rig {
    ScriptedBackend* backend;
    Gateway gateway;
    std::shared_ptr<FixtureWikiSource> wiki;
    Verifier verifier;
    PromptRegistry prompts;

    explicit Rig(std::unique_ptr<ScriptedBackend> b)
        : backend(b.get()),
          gateway(GatewayConfig{}, std::move(b), std::make_unique<HashEmbeddingBackend>()),
          wiki(gen_wiki()),
          verifier(wiki) {}

    GenerationContext ctx() { return GenerationContext{gateway, verifier, prompts}; }
};

Event covid_input() {
    Event event;
    event.id = "covid-19";
    event.title = "COVID-19 pandemic";
    event.description = "A novel coronavirus spread worldwide from late 2019.";
    event.theme = Theme::CultureAndSociety;
    return event;
}

const std::string kInputSummary =
    "Topic: a worldwide disease outbreak.\nBackground: late 2019 globalized world.\n"
    "Process: rapid contagion and lockdowns.\nResult: mass mortality and disruption.";

}  // namespace

TEST_CASE("reject reasons have stable labels") {
    CHECK(to_string(RejectReason::NotFound) == "not-found");
    CHECK(to_string(RejectReason::Ambiguous) == "ambiguous");
    CHECK(to_string(RejectReason::SelfMatch) == "self-match");
    CHECK(to_string(RejectReason::Transport) == "transport");
}

TEST_CASE("candidate set validation") {
    CandidateSet set;
    set.round = 0;
    CHECK_THROWS_AS(validate(set), SchemaError);

    set.round = 1;
    set.verified_from = {"orphan"};
    CHECK_THROWS_AS(validate(set), SchemaError);  // verified/verified_from mismatch

    set.verified_from.clear();
    set.proposed = {"Nobody decided on me"};
    CHECK_THROWS_AS(validate(set), SchemaError);  // undispositioned proposal

    set.proposed = {"Tulip mania"};
    Event event;
    event.id = "wiki:102";
    event.title = "Tulip mania";
    event.description = "A speculative bubble.";
    event.source = EventSource::Generated;
    set.verified = {event};
    set.verified_from = {"Tulip mania"};
    CHECK_NOTHROW(validate(set));

    set.verified[0].source = EventSource::Pool;
    CHECK_THROWS_AS(validate(set), SchemaError);  // verified events must be generated

    set.verified[0].source = EventSource::Generated;
    set.rejected.emplace_back("Atlantis", RejectReason::NotFound);
    set.proposed.push_back("Atlantis");
    CHECK_NOTHROW(validate(set));

    nlohmann::json j = to_json(set);
    CHECK(j["round"] == 1);
    CHECK(j["verified"][0]["title"] == "Tulip mania");
    CHECK(j["rejected"][0]["reason"] == "not-found");
}

TEST_CASE("reflection config validation") {
    ReflectionConfig config;
    CHECK_NOTHROW(validate(config));
    config.candidates_per_round = 0;
    CHECK_THROWS_AS(validate(config), ConfigError);
    config = ReflectionConfig{};
    config.warmup_rounds = -1;
    CHECK_THROWS_AS(validate(config), ConfigError);
    config = ReflectionConfig{};
    config.max_rounds = 0;
    CHECK_THROWS_AS(validate(config), ConfigError);
    config = ReflectionConfig{};
    config.warmup_rounds = 5;
    config.max_rounds = 5;
    CHECK_THROWS_AS(validate(config), ConfigError);  // warmup must leave live rounds
}

TEST_CASE("parse_single_title strips markup and skips headers") {
    CHECK(parse_single_title("Spanish flu") == "Spanish flu");
    CHECK(parse_single_title("  Tulip mania.  ") == "Tulip mania");
    CHECK(parse_single_title("\"Spanish flu\"") == "Spanish flu");
    CHECK(parse_single_title("- Spanish flu") == "Spanish flu");
    CHECK(parse_single_title("Historical Analogies Events:\nSpanish flu") == "Spanish flu");
    CHECK(parse_single_title("\n\nBlack Death\nTulip mania") == "Black Death");
    CHECK_THROWS_AS(parse_single_title(""), ParseError);
    CHECK_THROWS_AS(parse_single_title("Answer:"), ParseError);
}

TEST_CASE("parse_reflector understands both marker shapes") {
    ReflectorOutput out = parse_reflector("Reflection: The candidates are too recent.");
    CHECK(out.kind == ReflectorOutput::Kind::Reflection);
    CHECK(out.text == "The candidates are too recent.");
    CHECK(out.thought.empty());

    out = parse_reflector("These all fit well.\nFinal Answer: Tulip mania");
    CHECK(out.kind == ReflectorOutput::Kind::FinalAnswer);
    CHECK(out.text == "Tulip mania");
    CHECK(out.thought == "These all fit well.");

    // Payload on the next line.
    out = parse_reflector("Final Answer:\nSpanish flu");
    CHECK(out.kind == ReflectorOutput::Kind::FinalAnswer);
    CHECK(out.text == "Spanish flu");

    // An explicit final answer wins even after reflective preamble.
    out = parse_reflector("Reflection: weak set.\nFinal Answer: Black Death");
    CHECK(out.kind == ReflectorOutput::Kind::FinalAnswer);
    CHECK(out.text == "Black Death");

    // Markers are case-insensitive.
    out = parse_reflector("FINAL ANSWER: Tulip mania");
    CHECK(out.kind == ReflectorOutput::Kind::FinalAnswer);

    CHECK_THROWS_AS(parse_reflector("no markers at all"), ParseError);
    CHECK_THROWS_AS(parse_reflector("Reflection:"), ParseError);
    CHECK_THROWS_AS(parse_reflector("Final Answer:\n\n   \n"), ParseError);
}

TEST_CASE("direct_generate verifies the answer and traces the run") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kDirectGenNeedle, "", "Tulip mania");
    Rig rig(std::move(backend));

    AnalogyResult result = direct_generate(covid_input(), rig.ctx());
    CHECK(result.method == Method::DirectGen);
    CHECK(result.analog.title == "Tulip mania");
    CHECK(result.analog.id == "wiki:102");
    CHECK(result.analog.source == EventSource::Generated);
    REQUIRE(result.analog.page_id.has_value());
    CHECK(*result.analog.page_id == "102");
    CHECK(result.analog.description ==
          "Tulip mania was a speculative bubble in the Dutch Golden Age.");

    REQUIRE(result.trace.size() == 3);
    CHECK(result.trace[0].kind == TraceKind::Proposal);
    CHECK(result.trace[1].kind == TraceKind::Verification);
    CHECK(result.trace[1].payload.at("status") == "verified");
    CHECK(result.trace[2].kind == TraceKind::Selection);
    CHECK(result.trace[2].payload.at("via") == "direct-generation");
    CHECK(result.trace[2].payload.at("attempts") == 1);
    CHECK(rig.backend->calls() == 1);
}

TEST_CASE("direct_generate retries unverifiable answers with a reminder") {
    auto backend = std::make_unique<ScriptedBackend>();
    // The retry prompt lists the rejected answer; only then yields a real one.
    backend->on_contains(kDirectGenNeedle,
                         "could not be verified as real historical events", "Spanish flu");
    backend->on_contains(kDirectGenNeedle, "", "Atlantis sinking");
    Rig rig(std::move(backend));

    AnalogyResult result = direct_generate(covid_input(), rig.ctx());
    CHECK(result.analog.title == "Spanish flu");
    CHECK(rig.backend->calls() == 2);

    // The reminder names the rejected answer.
    bool saw_rejection = false;
    for (const TraceStep& step : result.trace)
        if (step.kind == TraceKind::Verification &&
            step.payload.at("title") == "Atlantis sinking" &&
            step.payload.at("status") == "not-found")
            saw_rejection = true;
    CHECK(saw_rejection);
    CHECK(result.trace.back().payload.at("attempts") == 2);
}

TEST_CASE("direct_generate exhausts its retry budget") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kDirectGenNeedle, "", "Atlantis sinking");
    Rig rig(std::move(backend));

    CHECK_THROWS_AS(direct_generate(covid_input(), rig.ctx()), ExhaustedRetries);
    CHECK(rig.backend->calls() == static_cast<std::size_t>(kDirectGenRetryBudget));
}

TEST_CASE("direct_generate rejects the input echoed back as its own analog") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kDirectGenNeedle, "", "COVID-19 pandemic");
    Rig rig(std::move(backend));
    CHECK_THROWS_AS(direct_generate(covid_input(), rig.ctx()), ExhaustedRetries);
}

TEST_CASE("propose_candidates dispositions every title and refills a thin round") {
    auto backend = std::make_unique<ScriptedBackend>();
    // The refill prompt lists the rejected titles.
    backend->on_contains(kProposeNeedle, "could not be verified as real, unambiguous",
                         "[\"Tulip mania\", \"Spanish flu\"]");
    backend->on_contains(
        kProposeNeedle, "",
        "[\"Spanish flu\", \"Atlantis sinking\", \"Mercury\", \"COVID-19 pandemic\", "
        "\"Global coronavirus outbreak\"]");
    Rig rig(std::move(backend));

    std::vector<TraceStep> trace;
    Event input = covid_input();
    CandidateSet set = propose_candidates(input, input.description, 10, {}, rig.ctx(),
                                          prompt_names::kProposeTwoStage, 1, trace);

    CHECK(set.refilled);
    REQUIRE(set.verified.size() == 2);
    CHECK(set.verified[0].title == "Spanish flu");
    CHECK(set.verified[1].title == "Tulip mania");
    CHECK(set.verified_from == std::vector<std::string>{"Spanish flu", "Tulip mania"});

    REQUIRE(set.rejected.size() == 4);
    auto reason_of = [&](const std::string& title) {
        for (const auto& [t, r] : set.rejected)
            if (t == title) return to_string(r);
        return std::string("missing");
    };
    CHECK(reason_of("Atlantis sinking") == "not-found");
    CHECK(reason_of("Mercury") == "ambiguous");
    CHECK(reason_of("COVID-19 pandemic") == "self-match");     // literal echo
    CHECK(reason_of("Global coronavirus outbreak") == "self-match");  // redirect to the input

    // The duplicate refill suggestion was not dispositioned twice.
    CHECK(set.proposed.size() == 6);
    CHECK_NOTHROW(validate(set));
    CHECK(rig.backend->calls() == 2);

    int proposals = 0, verifications = 0;
    for (const TraceStep& step : trace) {
        if (step.kind == TraceKind::Proposal) ++proposals;
        if (step.kind == TraceKind::Verification) ++verifications;
    }
    CHECK(proposals == 2);  // main round + refill
    CHECK(verifications == 6);
}

TEST_CASE("propose_candidates retries unparseable responses then gives up") {
    {
        auto backend = std::make_unique<ScriptedBackend>();
        backend->on_contains(kProposeNeedle, "(Attempt 2)", "[\"Spanish flu\", \"Tulip mania\"]");
        backend->on_contains(kProposeNeedle, "", "no list in sight");
        Rig rig(std::move(backend));
        std::vector<TraceStep> trace;
        Event input = covid_input();
        CandidateSet set = propose_candidates(input, input.description, 10, {}, rig.ctx(),
                                              prompt_names::kProposeTwoStage, 1, trace);
        CHECK(set.verified.size() == 2);
        CHECK(rig.backend->calls() == 2);
    }
    {
        auto backend = std::make_unique<ScriptedBackend>();
        backend->on_contains(kProposeNeedle, "", "still no list");
        Rig rig(std::move(backend));
        std::vector<TraceStep> trace;
        Event input = covid_input();
        CHECK_THROWS_AS(propose_candidates(input, input.description, 10, {}, rig.ctx(),
                                           prompt_names::kProposeTwoStage, 1, trace),
                        ParseError);
        CHECK(rig.backend->calls() == static_cast<std::size_t>(kProposalRetryBudget));
    }
}

TEST_CASE("propose_candidates throws EmptyRound when nothing survives") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kProposeNeedle, "", "[\"Atlantis sinking\"]");
    Rig rig(std::move(backend));
    std::vector<TraceStep> trace;
    Event input = covid_input();
    CHECK_THROWS_AS(propose_candidates(input, input.description, 5, {}, rig.ctx(),
                                       prompt_names::kProposeTwoStage, 1, trace),
                    EmptyRound);
    CHECK(rig.backend->calls() == 2);  // main + best-effort refill

    CHECK_THROWS_AS(propose_candidates(input, input.description, 0, {}, rig.ctx(),
                                       prompt_names::kProposeTwoStage, 1, trace),
                    ConfigError);
}

TEST_CASE("transport failures during verification reject the title, not the run") {
    struct DownSource : WikiSource {
        std::optional<WikiPage> resolve(const std::string&) override {
            throw TransportError("wiki offline");
        }
        std::vector<std::string> search(const std::string&, int) override {
            throw TransportError("wiki offline");
        }
        std::optional<WikiPage> fetch(const std::string&) override {
            throw TransportError("wiki offline");
        }
    };

    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kProposeNeedle, "", "[\"Spanish flu\"]");
    ScriptedBackend* raw = backend.get();
    Gateway gateway(GatewayConfig{}, std::move(backend), std::make_unique<HashEmbeddingBackend>());
    VerifierConfig vconfig;
    vconfig.retry.max_attempts = 1;  // fail fast; retry behavior is tested elsewhere
    Verifier verifier(std::make_shared<DownSource>(), vconfig);
    PromptRegistry prompts;
    GenerationContext ctx{gateway, verifier, prompts};

    std::vector<TraceStep> trace;
    Event input = covid_input();
    try {
        propose_candidates(input, input.description, 5, {}, ctx,
                           prompt_names::kProposeTwoStage, 1, trace);
        FAIL("expected EmptyRound");
    } catch (const EmptyRound&) {
    }
    bool saw_transport = false;
    for (const TraceStep& step : trace)
        if (step.kind == TraceKind::Verification && step.payload.at("status") == "transport")
            saw_transport = true;
    CHECK(saw_transport);
    CHECK(raw->calls() == 2);
}

TEST_CASE("select_from_candidates short-circuits a single candidate") {
    auto backend = std::make_unique<ScriptedBackend>();  // no rules: any call throws
    Rig rig(std::move(backend));

    CandidateSet set;
    set.round = 1;
    Event only;
    only.id = "wiki:102";
    only.title = "Tulip mania";
    only.description = "A speculative bubble.";
    only.source = EventSource::Generated;
    set.proposed = {"Tulip mania"};
    set.verified = {only};
    set.verified_from = {"Tulip mania"};

    std::vector<TraceStep> trace;
    Event input = covid_input();
    Event chosen = select_from_candidates(input, input.description, set, {"A speculative bubble."},
                                          rig.ctx(), trace);
    CHECK(chosen.title == "Tulip mania");
    REQUIRE(trace.size() == 1);
    CHECK(trace[0].payload.at("via") == "single-candidate");
    CHECK(rig.backend->calls() == 0);

    CHECK_THROWS_AS(select_from_candidates(input, input.description, set, {}, rig.ctx(), trace),
                    ConfigError);  // description count mismatch
    CandidateSet empty;
    CHECK_THROWS_AS(select_from_candidates(input, input.description, empty, {}, rig.ctx(), trace),
                    ConfigError);
}

TEST_CASE("select_from_candidates honors a proposal-side title echo") {
    auto backend = std::make_unique<ScriptedBackend>();
    // The model stubbornly echoes the proposal alias, never the canonical title.
    backend->on_contains(kSelectNeedle, "", "1918 influenza pandemic");
    Rig rig(std::move(backend));

    std::vector<TraceStep> trace;
    Event input = covid_input();
    CandidateSet set = [&] {
        auto propose_backend = std::make_unique<ScriptedBackend>();
        propose_backend->on_contains(kProposeNeedle, "",
                                     "[\"Tulip mania\", \"1918 influenza pandemic\"]");
        Rig propose_rig(std::move(propose_backend));
        return propose_candidates(input, input.description, 10, {}, propose_rig.ctx(),
                                  prompt_names::kProposeTwoStage, 1, trace);
    }();
    REQUIRE(set.verified.size() == 2);
    CHECK(set.verified[1].title == "Spanish flu");  // canonicalized from the alias

    std::vector<std::string> descriptions{set.verified[0].description,
                                          set.verified[1].description};
    Event chosen =
        select_from_candidates(input, input.description, set, descriptions, rig.ctx(), trace);
    CHECK(chosen.title == "Spanish flu");
    CHECK(trace.back().payload.at("via") == "model-choice-proposed-title");
    CHECK(trace.back().payload.at("fallback") == false);
    // The canonical-title matcher retried its full budget before the
    // proposal-side match rescued the choice.
    CHECK(rig.backend->calls() == 3);
}

TEST_CASE("two_stage_generate proposes then selects") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kProposeNeedle, "", "[\"Spanish flu\", \"Tulip mania\"]");
    backend->on_contains(kSelectNeedle, "", "Spanish flu is the closest analogy.");
    Rig rig(std::move(backend));

    AnalogyResult result = two_stage_generate(covid_input(), rig.ctx());
    CHECK(result.method == Method::TwoStageGen);
    CHECK(result.analog.title == "Spanish flu");
    CHECK(result.trace.back().kind == TraceKind::Selection);
    CHECK(result.trace.back().payload.at("via") == "model-choice");
    CHECK(result.trace.back().payload.at("fallback") == false);
    CHECK(rig.backend->calls() == 2);
}

TEST_CASE("summarize_then_generate selects over summaries and drops unsummarizable candidates") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kSummarizeNeedle, "COVID", kInputSummary);
    backend->on_contains(kSummarizeNeedle, "Spanish flu",
                         "Topic: an influenza pandemic.\nBackground: wartime 1918.\n"
                         "Process: global waves of infection.\nResult: tens of millions dead.");
    backend->on_contains(kSummarizeNeedle, "Black Death",
                         "Topic: a plague pandemic.\nBackground: medieval trade routes.\n"
                         "Process: flea-borne spread.\nResult: a third of Europe dead.");
    backend->on_contains(kSummarizeNeedle, "", "I cannot summarize this event.");
    backend->on_contains(kProposeNeedle, "",
                         "[\"Spanish flu\", \"Tulip mania\", \"Black Death\"]");
    std::string select_user;
    backend->on(contains(kSelectNeedle, ""), [&](const CompletionRequest& request) {
        select_user = request.user_prompt;
        return std::string("Black Death");
    });
    Rig rig(std::move(backend));

    AnalogyResult result = summarize_then_generate(covid_input(), rig.ctx());
    CHECK(result.method == Method::SummarizeGen);
    CHECK(result.analog.title == "Black Death");

    // Tulip mania verified but refused to summarize: dropped with a trace.
    bool saw_summary_failed = false;
    int summary_steps = 0;
    for (const TraceStep& step : result.trace) {
        if (step.kind == TraceKind::Verification &&
            step.payload.at("status") == "summary-failed" &&
            step.payload.at("title") == "Tulip mania")
            saw_summary_failed = true;
        if (step.kind == TraceKind::Reflection && step.payload.at("stage") == "summary")
            ++summary_steps;
    }
    CHECK(saw_summary_failed);
    CHECK(summary_steps == 3);  // input + two surviving candidates

    // Selection happens over the four-part summaries, not raw descriptions.
    CHECK(select_user.find("Topic: an influenza pandemic.") != std::string::npos);
    CHECK(select_user.find("flea-borne spread") != std::string::npos);
    CHECK(select_user.find("speculative bubble") == std::string::npos);
    CHECK(select_user.find("Topic: a worldwide disease outbreak.") != std::string::npos);
}

TEST_CASE("self_reflect_generate accepts an immediate final answer in one round") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kSummarizeNeedle, "", kInputSummary);
    backend->on_contains(kSelfReflectNeedle, "", "[\"Spanish flu\", \"Tulip mania\"]");
    backend->on_contains(kReflectNeedle, "", "Both fit.\nFinal Answer: Spanish flu");
    Rig rig(std::move(backend));

    AnalogyResult result = self_reflect_generate(covid_input(), ReflectionConfig{}, rig.ctx());
    CHECK(result.method == Method::SelfReflect);
    CHECK(result.analog.title == "Spanish flu");

    int proposal_rounds = 0;
    for (const TraceStep& step : result.trace)
        if (step.kind == TraceKind::Proposal) ++proposal_rounds;
    CHECK(proposal_rounds == 1);

    const TraceStep& selection = result.trace.back();
    CHECK(selection.kind == TraceKind::Selection);
    CHECK(selection.payload.at("via") == "reflector-final-answer");
    CHECK(selection.payload.at("round") == 1);
    CHECK(rig.backend->calls() == 3);  // summary + proposal + reflection
}

TEST_CASE("warm-up rounds ignore acceptance until the window passes") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kSummarizeNeedle, "", kInputSummary);
    backend->on_contains(kSelfReflectNeedle, "", "[\"Spanish flu\", \"Tulip mania\"]");
    backend->on_contains(kReflectNeedle, "", "Final Answer: Spanish flu");  // always accepts
    Rig rig(std::move(backend));

    ReflectionConfig config;
    config.warmup_rounds = 2;
    config.max_rounds = 5;
    AnalogyResult result = self_reflect_generate(covid_input(), config, rig.ctx());
    CHECK(result.analog.title == "Spanish flu");

    // Acceptance lands exactly at round 3, never earlier.
    int selections = 0;
    for (const TraceStep& step : result.trace)
        if (step.kind == TraceKind::Selection) {
            ++selections;
            CHECK(step.payload.at("round") == 3);
        }
    CHECK(selections == 1);

    int ignored = 0, persistent = 0;
    for (const TraceStep& step : result.trace) {
        if (step.kind != TraceKind::Reflection) continue;
        std::string stage = step.payload.value("stage", "");
        if (stage == "warmup-accept-ignored") ++ignored;
        if (stage == "warmup-persistent-accept") ++persistent;
    }
    // Each warm-up round burns the full reflector budget on ignored accepts.
    CHECK(ignored == 2 * kReflectorRetryBudget);
    CHECK(persistent == 2);
}

TEST_CASE("persistent reflection terminates at max rounds with a forced selection") {
    auto backend = std::make_unique<ScriptedBackend>();
    std::vector<std::string> propose_prompts;
    backend->on_contains(kSummarizeNeedle, "", kInputSummary);
    backend->on(contains(kSelfReflectNeedle, ""), [&](const CompletionRequest& request) {
        propose_prompts.push_back(request.user_prompt);
        return std::string("[\"Spanish flu\", \"Tulip mania\"]");
    });
    backend->on_contains(kReflectNeedle, "", "Hmm.\nReflection: look for older crises.");
    backend->on_contains(kSelectNeedle, "", "Tulip mania");
    Rig rig(std::move(backend));

    ReflectionConfig config;
    config.max_rounds = 3;
    AnalogyResult result = self_reflect_generate(covid_input(), config, rig.ctx());
    CHECK(result.analog.title == "Tulip mania");

    // Three proposal rounds ran; later prompts carry the accumulated notes.
    REQUIRE(propose_prompts.size() == 3);
    CHECK(propose_prompts[0].find("look for older crises.") == std::string::npos);
    CHECK(propose_prompts[1].find("Reflection: look for older crises.") != std::string::npos);
    CHECK(propose_prompts[2].find("Reflection: look for older crises.") != std::string::npos);

    bool saw_forced = false;
    int reflection_notes = 0;
    for (const TraceStep& step : result.trace) {
        if (step.kind != TraceKind::Reflection) continue;
        std::string stage = step.payload.value("stage", "");
        if (stage == "forced-termination") saw_forced = true;
        if (stage == "reflection") {
            ++reflection_notes;
            CHECK(step.payload.at("text") == "look for older crises.");
            CHECK(step.payload.at("thought") == "Hmm.");
        }
    }
    CHECK(saw_forced);
    CHECK(reflection_notes == 3);

    // The pooled forced selection deduplicates repeated candidates: the
    // listing offers exactly the two distinct events.
    CHECK(result.trace.back().payload.at("via") == "model-choice");
}

TEST_CASE("the reflector is retried when unparseable or off-list") {
    {
        auto backend = std::make_unique<ScriptedBackend>();
        backend->on_contains(kSummarizeNeedle, "", kInputSummary);
        backend->on_contains(kSelfReflectNeedle, "", "[\"Spanish flu\", \"Tulip mania\"]");
        backend->on_contains(kReflectNeedle, "Respond with either",
                             "Final Answer: Spanish flu");
        backend->on_contains(kReflectNeedle, "", "mumbling without any marker");
        Rig rig(std::move(backend));
        AnalogyResult result = self_reflect_generate(covid_input(), ReflectionConfig{}, rig.ctx());
        CHECK(result.analog.title == "Spanish flu");
        CHECK(rig.backend->calls() == 4);  // summary + proposal + 2 reflector attempts
    }
    {
        auto backend = std::make_unique<ScriptedBackend>();
        backend->on_contains(kSummarizeNeedle, "", kInputSummary);
        backend->on_contains(kSelfReflectNeedle, "", "[\"Spanish flu\", \"Tulip mania\"]");
        backend->on_contains(kReflectNeedle, "must name one of the optional",
                             "Final Answer: Tulip mania");
        backend->on_contains(kReflectNeedle, "", "Final Answer: Atlantis sinking");
        Rig rig(std::move(backend));
        AnalogyResult result = self_reflect_generate(covid_input(), ReflectionConfig{}, rig.ctx());
        CHECK(result.analog.title == "Tulip mania");
    }
}

TEST_CASE("a final answer naming the proposal alias resolves to the canonical event") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains(kSummarizeNeedle, "", kInputSummary);
    backend->on_contains(kSelfReflectNeedle, "",
                         "[\"Tulip mania\", \"1918 influenza pandemic\"]");
    backend->on_contains(kReflectNeedle, "", "Final Answer: 1918 influenza pandemic");
    Rig rig(std::move(backend));

    AnalogyResult result = self_reflect_generate(covid_input(), ReflectionConfig{}, rig.ctx());
    CHECK(result.analog.title == "Spanish flu");
    REQUIRE(result.analog.page_id.has_value());
    CHECK(*result.analog.page_id == "101");
}

TEST_CASE("self_reflect_generate validates its configuration up front") {
    auto backend = std::make_unique<ScriptedBackend>();
    Rig rig(std::move(backend));
    ReflectionConfig config;
    config.warmup_rounds = 7;
    config.max_rounds = 5;
    CHECK_THROWS_AS(self_reflect_generate(covid_input(), config, rig.ctx()), ConfigError);
    CHECK(rig.backend->calls() == 0);
}

TEST_CASE("uniform_index draws deterministically and uniformly") {
    std::mt19937_64 a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(uniform_index(a, 7) == uniform_index(b, 7));

    std::mt19937_64 rng(5);
    std::array<int, 4> buckets{};
    for (int i = 0; i < 10000; ++i) {
        std::size_t v = uniform_index(rng, 4);
        REQUIRE(v < 4);
        ++buckets[v];
    }
    for (int count : buckets) CHECK(count > 2000);  // expected 2500 each

    CHECK(uniform_index(rng, 1) == 0);
    CHECK_THROWS_AS(uniform_index(rng, 0), ConfigError);
}

TEST_CASE("random baselines draw from the right domains") {
    std::vector<Event> events;
    auto pool_event = [](std::string id, std::string title, Theme theme) {
        Event e;
        e.id = std::move(id);
        e.title = std::move(title);
        e.description = "Pool description of " + e.title + ".";
        e.theme = theme;
        e.source = EventSource::Pool;
        return e;
    };
    events.push_back(pool_event("p1", "COVID-19 pandemic", Theme::CultureAndSociety));  // self
    events.push_back(pool_event("p2", "Spanish flu", Theme::CultureAndSociety));
    events.push_back(pool_event("p3", "Winter War", Theme::War));
    EventPool pool = make_pool(events);

    Event input = covid_input();

    SUBCASE("random-pool excludes the input and is seed-deterministic") {
        AnalogyResult first = random_baseline(input, Method::RandomPool, &pool, 42, nullptr);
        AnalogyResult second = random_baseline(input, Method::RandomPool, &pool, 42, nullptr);
        CHECK(first.analog.title == second.analog.title);
        CHECK(first.trace.back().payload.at("domain_size") == 2);
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            AnalogyResult r = random_baseline(input, Method::RandomPool, &pool, seed, nullptr);
            CHECK(r.analog.title != "COVID-19 pandemic");
            CHECK(r.method == Method::RandomPool);
        }
        CHECK_THROWS_AS(random_baseline(input, Method::RandomPool, nullptr, 1, nullptr),
                        ConfigError);
    }

    SUBCASE("random-theme draws inside the input's theme") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            AnalogyResult r = random_baseline(input, Method::RandomTheme, &pool, seed, nullptr);
            CHECK(r.analog.title == "Spanish flu");  // only themed peer after self-exclusion
            CHECK(r.trace.back().payload.at("via") == "random-theme");
        }
        Event themeless = input;
        themeless.theme.reset();
        CHECK_THROWS_AS(random_baseline(themeless, Method::RandomTheme, &pool, 1, nullptr),
                        ConfigError);
        Event economy_input = input;
        economy_input.theme = Theme::Economy;  // pool has no Economy events
        CHECK_THROWS_AS(random_baseline(economy_input, Method::RandomTheme, &pool, 1, nullptr),
                        EmptyDomain);
    }

    SUBCASE("a pool holding only the input itself is an empty domain") {
        EventPool self_only = make_pool({pool_event("p1", "COVID-19 pandemic",
                                                    Theme::CultureAndSociety)});
        CHECK_THROWS_AS(random_baseline(input, Method::RandomPool, &self_only, 3, nullptr),
                        EmptyDomain);
    }

    SUBCASE("random-candidate proposes then draws among verified titles") {
        auto backend = std::make_unique<ScriptedBackend>();
        backend->on_contains(kProposeNeedle, "",
                             "[\"Spanish flu\", \"Tulip mania\", \"Atlantis sinking\"]");
        Rig rig(std::move(backend));
        GenerationContext ctx = rig.ctx();

        AnalogyResult first = random_baseline(input, Method::RandomCandidate, nullptr, 9, &ctx);
        AnalogyResult second = random_baseline(input, Method::RandomCandidate, nullptr, 9, &ctx);
        CHECK(first.analog.title == second.analog.title);
        CHECK((first.analog.title == "Spanish flu" || first.analog.title == "Tulip mania"));
        CHECK(first.analog.source == EventSource::Generated);
        CHECK(first.trace.back().payload.at("via") == "random-candidate");
        CHECK(first.trace.back().payload.at("domain_size") == 2);

        CHECK_THROWS_AS(random_baseline(input, Method::RandomCandidate, nullptr, 9, nullptr),
                        ConfigError);
    }

    SUBCASE("non-random methods are rejected") {
        CHECK_THROWS_AS(random_baseline(input, Method::DirectGen, &pool, 1, nullptr), ConfigError);
    }
}

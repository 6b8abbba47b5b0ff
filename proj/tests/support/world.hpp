#pragma once

#include "analogist/events.hpp"
#include "analogist/wiki.hpp"
#include "scripted.hpp"

#include <memory>
#include <string>
#include <vector>

namespace analogist::testing {

// One popular-set input with its scripted model behavior and gold answers.
struct WorldInput {
    Event event;               // the contemporary input event
    std::string model_answer;  // title the scripted model proposes/accepts
    GoldAnswer gold;           // canonical + aliases (the gold file row)
};

// The self-contained demo universe: 20 popular inputs, a themed pool whose
// events all have encyclopedia pages, and scripted model behavior that drives
// every pipeline deterministically. The shipped data files and replay
// fixtures are generated from this single source of truth.
struct World {
    std::vector<WorldInput> inputs;
    std::vector<Event> pool;
    std::shared_ptr<FixtureWikiSource> wiki;
    // Proposal-list filler that resolves to no page; exercises rejection.
    std::string unverifiable_decoy;
};

World make_world();

// Chat backend covering summarize/score/selection/proposal/reflection for
// every world input (plus any event whose description the judge summarizes).
std::unique_ptr<ScriptedBackend> make_world_backend(const World& world);

std::vector<GoldAnalogy> world_gold(const World& world);

// The world input with the given event id (throws when absent).
const WorldInput& world_input(const World& world, const std::string& id);

}  // namespace analogist::testing

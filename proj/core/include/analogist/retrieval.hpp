#pragma once

#include "analogist/events.hpp"
#include "analogist/gateway.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace analogist {

// The historical event pool (every event source = Pool, theme present,
// ids unique). Insertion order is load order and is the ranking tie-breaker.
struct EventPool {
    std::vector<Event> events;
    std::map<Theme, std::vector<std::size_t>> by_theme;    // theme -> indices
    std::unordered_map<std::string, std::size_t> by_id;

    std::size_t size() const { return events.size(); }
    const Event* find(const std::string& id) const;
};

// Validates and indexes a batch of events. Throws SchemaError / DuplicateId.
EventPool make_pool(std::vector<Event> events);

// JSONL file -> validated pool. Errors carry path and line number.
EventPool ingest_pool(const std::string& path);

// Digest of the pool content an index was built from; identifies staleness.
std::string pool_digest(const EventPool& pool);

struct EmbeddingIndex {
    std::string model_tag;
    std::string pool_digest;
    std::size_t dimension = 0;
    std::vector<std::string> ids;               // pool insertion order
    std::vector<std::vector<float>> vectors;    // parallel to ids

    std::size_t size() const { return ids.size(); }
};

// Binary index persistence (see README for the format). save is atomic
// (write + rename) and byte-stable: identical indexes produce identical files.
void save_index(const EmbeddingIndex& index, const std::string& path);
EmbeddingIndex load_index(const std::string& path);

// Embeds every pool event's description. When index_path names a fresh index
// (same model tag + pool digest), loads it instead of re-embedding; otherwise
// builds and persists. Partial progress survives via the gateway cache.
EmbeddingIndex build_index(const EventPool& pool, Gateway& gateway,
                           const std::string& index_path = "", int jobs = 1);

struct ScoredEntry {
    std::string id;
    double score;
};

// Exhaustive cosine ranking: min(k, |index|) entries, score descending, ties
// by pool insertion order. Throws EmptyIndex / ModelTagMismatch / ConfigError.
std::vector<ScoredEntry> top_k(const EmbeddingIndex& index, const EmbeddingVector& query,
                               std::size_t k);

// §-style dataset retrieval: embed the input, return the nearest pool event.
// Pool events whose normalized title equals the input's are excluded.
AnalogyResult direct_retrieve(const Event& input, const EventPool& pool,
                              const EmbeddingIndex& index, Gateway& gateway);

// Stage 1: cosine top-10 (self excluded). Stage 2: the selection prompt picks
// one candidate; an off-list answer after the retry budget falls back to the
// cosine top-1 with a fallback flag in the trace.
AnalogyResult two_stage_retrieve(const Event& input, const EventPool& pool,
                                 const EmbeddingIndex& index, Gateway& gateway,
                                 const PromptRegistry& prompts);

// Shared by retrieval stage 2 and the generation module's selector: renders
// the selection prompt over the candidates and resolves the model's choice.
// Returns (index into candidates, fallback flag, raw response).
struct SelectionOutcome {
    std::size_t index = 0;
    bool fallback = false;
    std::string response;
};
SelectionOutcome run_selection(const Event& input, const std::string& input_description,
                               const std::vector<Event>& candidates,
                               const std::vector<std::string>& candidate_descriptions,
                               Gateway& gateway, const PromptRegistry& prompts);

inline constexpr int kSelectionRetryBudget = 3;
inline constexpr std::size_t kStageOneCandidates = 10;

}  // namespace analogist

#include "analogist/retrieval.hpp"

#include "analogist/text.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace analogist {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kIndexMagic[8] = {'A', 'N', 'L', 'G', 'I', 'D', 'X', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f32(std::string& out, float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size())
            throw SchemaError("index file truncated: " + path_);
    }

    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

const Event* EventPool::find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &events[it->second];
}

EventPool make_pool(std::vector<Event> events) {
    EventPool pool;
    for (Event& event : events) {
        event.source = EventSource::Pool;
        validate(event);
    }
    pool.events = std::move(events);
    for (std::size_t i = 0; i < pool.events.size(); ++i) {
        if (!pool.by_id.emplace(pool.events[i].id, i).second)
            throw DuplicateIdError("duplicate event id in pool: " + pool.events[i].id);
        pool.by_theme[*pool.events[i].theme].push_back(i);
    }
    return pool;
}

EventPool ingest_pool(const std::string& path) {
    return make_pool(load_events_jsonl(path));
}

std::string pool_digest(const EventPool& pool) {
    std::string material;
    for (const Event& event : pool.events) {
        material += event.id;
        material += '\x1f';
        material += event.title;
        material += '\x1f';
        material += event.description;
        material += '\x1e';
    }
    return sha256_hex(material);
}

void save_index(const EmbeddingIndex& index, const std::string& path) {
    std::string out;
    out.append(kIndexMagic, sizeof(kIndexMagic));
    put_u32(out, static_cast<std::uint32_t>(index.model_tag.size()));
    out += index.model_tag;
    put_u32(out, static_cast<std::uint32_t>(index.pool_digest.size()));
    out += index.pool_digest;
    put_u32(out, static_cast<std::uint32_t>(index.dimension));
    put_u64(out, index.ids.size());
    for (std::size_t i = 0; i < index.ids.size(); ++i) {
        put_u32(out, static_cast<std::uint32_t>(index.ids[i].size()));
        out += index.ids[i];
        for (float v : index.vectors[i]) put_f32(out, v);
    }

    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
        if (!file) throw ConfigError("cannot write index: " + path);
        file.write(out.data(), static_cast<std::streamsize>(out.size()));
    }
    fs::rename(tmp, target);
}

EmbeddingIndex load_index(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open index: " + path);
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader reader(data, path);
    if (reader.bytes(sizeof(kIndexMagic)) != std::string(kIndexMagic, sizeof(kIndexMagic)))
        throw SchemaError("not an embedding index: " + path);
    EmbeddingIndex index;
    index.model_tag = reader.bytes(reader.u32());
    index.pool_digest = reader.bytes(reader.u32());
    index.dimension = reader.u32();
    std::uint64_t count = reader.u64();
    index.ids.reserve(count);
    index.vectors.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        index.ids.push_back(reader.bytes(reader.u32()));
        std::vector<float> vec(index.dimension);
        for (std::size_t d = 0; d < index.dimension; ++d) vec[d] = reader.f32();
        index.vectors.push_back(std::move(vec));
    }
    if (!reader.exhausted()) throw SchemaError("trailing bytes in index: " + path);
    return index;
}

EmbeddingIndex build_index(const EventPool& pool, Gateway& gateway,
                           const std::string& index_path, int jobs) {
    std::string digest = pool_digest(pool);
    std::string tag = gateway.embedding_model_tag();

    if (!index_path.empty() && fs::exists(index_path)) {
        try {
            EmbeddingIndex cached = load_index(index_path);
            if (cached.model_tag == tag && cached.pool_digest == digest &&
                cached.size() == pool.size())
                return cached;  // unchanged pool: rebuild is a no-op
        } catch (const Error&) {
            // Stale or corrupt file; rebuild below and overwrite it.
        }
    }

    EmbeddingIndex index;
    index.model_tag = tag;
    index.pool_digest = digest;
    index.ids.resize(pool.size());
    index.vectors.resize(pool.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= pool.size()) return;
            try {
                EmbeddingVector vec = gateway.embed(pool.events[i].description);
                index.ids[i] = pool.events[i].id;
                index.vectors[i] = std::move(vec.values);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(pool.size());  // stop the other workers
                return;
            }
        }
    };
    int workers = std::max(1, jobs);
    if (workers == 1 || pool.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
        for (auto& thread : threads) thread.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (const auto& vec : index.vectors) {
        if (index.dimension == 0) index.dimension = vec.size();
        if (vec.size() != index.dimension)
            throw SchemaError("embedding backend returned mixed dimensions");
    }

    if (!index_path.empty()) save_index(index, index_path);
    return index;
}

std::vector<ScoredEntry> top_k(const EmbeddingIndex& index, const EmbeddingVector& query,
                               std::size_t k) {
    if (index.size() == 0) throw EmptyIndex("top_k over an empty index");
    if (k == 0) throw ConfigError("top_k: k must be >= 1");
    if (query.model_tag != index.model_tag)
        throw ModelTagMismatch("query embedded with '" + query.model_tag + "', index built with '" +
                               index.model_tag + "'");

    std::vector<std::size_t> order(index.size());
    std::vector<double> scores(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        order[i] = i;
        scores[i] = cosine_similarity(index.vectors[i], query.values);
    }
    // stable_sort keeps pool insertion order on score ties.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<ScoredEntry> ranked;
    ranked.reserve(std::min(k, index.size()));
    for (std::size_t i = 0; i < std::min(k, index.size()); ++i)
        ranked.push_back(ScoredEntry{index.ids[order[i]], scores[order[i]]});
    return ranked;
}

namespace {

// Full ranking with the input's own title excluded; the shared front half of
// both retrieval pipelines. Also emits the Retrieval trace step.
std::vector<ScoredEntry> ranked_pool(const Event& input, const EventPool& pool,
                                     const EmbeddingIndex& index, Gateway& gateway,
                                     std::vector<TraceStep>& trace) {
    if (index.size() != pool.size())
        throw ConfigError("index entry count does not match the pool");
    EmbeddingVector query = gateway.embed(input.description);
    std::vector<ScoredEntry> ranking = top_k(index, query, index.size());

    std::string self = text::normalize_title(input.title);
    std::vector<ScoredEntry> kept;
    json excluded = json::array();
    for (ScoredEntry& entry : ranking) {
        const Event* event = pool.find(entry.id);
        if (!event) throw SchemaError("index id not in pool: " + entry.id);
        if (text::normalize_title(event->title) == self) {
            excluded.push_back(entry.id);
            continue;
        }
        kept.push_back(std::move(entry));
    }
    if (kept.empty())
        throw EmptyDomain("pool holds no event distinct from '" + input.title + "'");

    json ranking_json = json::array();
    for (std::size_t i = 0; i < kept.size() && i < kStageOneCandidates; ++i)
        ranking_json.push_back({{"id", kept[i].id}, {"score", kept[i].score}});
    trace.push_back(TraceStep{TraceKind::Retrieval,
                              json{{"ranking", ranking_json}, {"excluded", excluded}}});
    return kept;
}

}  // namespace

AnalogyResult direct_retrieve(const Event& input, const EventPool& pool,
                              const EmbeddingIndex& index, Gateway& gateway) {
    AnalogyResult result;
    result.input_id = input.id;
    result.method = Method::DirectRetrieve;

    std::vector<ScoredEntry> ranking = ranked_pool(input, pool, index, gateway, result.trace);
    result.analog = *pool.find(ranking.front().id);
    result.trace.push_back(TraceStep{
        TraceKind::Selection,
        json{{"chosen", result.analog.title}, {"via", "cosine-top1"},
             {"score", ranking.front().score}}});
    validate(result, input.title);
    return result;
}

SelectionOutcome run_selection(const Event& input, const std::string& input_description,
                               const std::vector<Event>& candidates,
                               const std::vector<std::string>& candidate_descriptions,
                               Gateway& gateway, const PromptRegistry& prompts) {
    if (candidates.empty()) throw ConfigError("selection over zero candidates");
    if (candidates.size() != candidate_descriptions.size())
        throw ConfigError("selection: candidates and descriptions differ in length");

    std::string listing;
    std::vector<std::string> titles;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        listing += std::to_string(i + 1) + ". " + candidates[i].title + ": " +
                   candidate_descriptions[i] + "\n";
        titles.push_back(candidates[i].title);
    }

    std::map<std::string, std::string> bindings{{"title", input.title},
                                                {"description", input_description},
                                                {"candidates", listing}};
    std::string system = render(prompts.system(prompt_names::kSelect), bindings);
    std::string user = render(prompts.user(prompt_names::kSelect), bindings);

    SelectionOutcome outcome;
    for (int attempt = 1; attempt <= kSelectionRetryBudget; ++attempt) {
        std::string prompt = user;
        // The attempt tag keeps retry cache keys distinct, so a cached
        // off-list answer is not replayed at us verbatim.
        if (attempt > 1)
            prompt += "\nAnswer with the exact title of one of the optional historical events."
                      "\n(Attempt " + std::to_string(attempt) + ")";
        outcome.response = gateway.complete(gateway.chat_request(system, prompt));
        if (auto picked = match_selection(outcome.response, titles)) {
            outcome.index = *picked;
            outcome.fallback = false;
            return outcome;
        }
    }
    // Off-list after the budget: defined fallback to the first candidate
    // (cosine top-1 for retrieval, first verified for generation).
    outcome.index = 0;
    outcome.fallback = true;
    return outcome;
}

AnalogyResult two_stage_retrieve(const Event& input, const EventPool& pool,
                                 const EmbeddingIndex& index, Gateway& gateway,
                                 const PromptRegistry& prompts) {
    AnalogyResult result;
    result.input_id = input.id;
    result.method = Method::TwoStageRetrieve;

    std::vector<ScoredEntry> ranking = ranked_pool(input, pool, index, gateway, result.trace);
    std::vector<Event> candidates;
    std::vector<std::string> descriptions;
    for (std::size_t i = 0; i < ranking.size() && i < kStageOneCandidates; ++i) {
        candidates.push_back(*pool.find(ranking[i].id));
        descriptions.push_back(candidates.back().description);
    }

    if (candidates.size() == 1) {
        // Degenerate stage 2: nothing to choose between, no model call.
        result.analog = candidates.front();
        result.trace.push_back(TraceStep{
            TraceKind::Selection,
            json{{"chosen", result.analog.title}, {"via", "single-candidate"}}});
        validate(result, input.title);
        return result;
    }

    SelectionOutcome outcome =
        run_selection(input, input.description, candidates, descriptions, gateway, prompts);
    result.analog = candidates[outcome.index];
    result.trace.push_back(TraceStep{
        TraceKind::Selection,
        json{{"chosen", result.analog.title},
             {"via", outcome.fallback ? "fallback-cosine-top1" : "model-choice"},
             {"fallback", outcome.fallback},
             {"response", outcome.response}}});
    validate(result, input.title);
    return result;
}

}  // namespace analogist

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "analogist/http_backends.hpp"

#include "analogist/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <mutex>

namespace analogist {

using nlohmann::json;

std::string api_key_from_env(const std::string& env_var) {
    const char* value = std::getenv(env_var.c_str());
    return value ? value : "";
}

namespace {

// Maps an httplib result to the error families the retry loops understand.
// Returns the body of a 2xx response.
std::string check_response(const httplib::Result& res, const std::string& what) {
    if (!res)
        throw TransportError(what + ": " + httplib::to_string(res.error()));
    int status = res->status;
    if (status == 429 || status >= 500)
        throw TransportError(what + ": HTTP " + std::to_string(status));
    if (status == 401 || status == 403)
        throw ConfigError(what + ": HTTP " + std::to_string(status) + " (check the API key)");
    if (status < 200 || status >= 300)
        throw ConfigError(what + ": HTTP " + std::to_string(status) + ": " +
                          res->body.substr(0, 200));
    return res->body;
}

json parse_body(const std::string& body, const std::string& what) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw SchemaError(what + ": response is not JSON");
    return j;
}

class OpenAiClient {
public:
    OpenAiClient(std::string base_url, std::string api_key, std::string user_agent)
        : base_url_(std::move(base_url)),
          api_key_(std::move(api_key)),
          user_agent_(std::move(user_agent)) {}

    json post(const std::string& path, const json& payload) {
        if (api_key_.empty())
            throw ConfigError("no API key: set the provider key environment variable");
        // httplib clients are not safe for concurrent requests.
        std::lock_guard lock(mutex_);
        httplib::Client client(base_url_);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers headers{{"Authorization", "Bearer " + api_key_},
                                 {"User-Agent", user_agent_}};
        auto res = client.Post(path, headers, payload.dump(), "application/json");
        return parse_body(check_response(res, base_url_ + path), base_url_ + path);
    }

private:
    std::string base_url_;
    std::string api_key_;
    std::string user_agent_;
    std::mutex mutex_;
};

class OpenAiChatBackend : public ChatBackend {
public:
    OpenAiChatBackend(std::string base_url, std::string api_key, std::string user_agent)
        : client_(std::move(base_url), std::move(api_key), std::move(user_agent)) {}

    std::string complete(const CompletionRequest& request) override {
        json messages = json::array();
        if (!request.system_prompt.empty())
            messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
        messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
        json payload{{"model", request.model_tag},
                     {"temperature", request.temperature},
                     {"messages", messages}};
        json body = client_.post("/v1/chat/completions", payload);
        if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
            throw SchemaError("chat response has no choices");
        const json& message = body["choices"][0].value("message", json::object());
        if (!message.contains("content") || !message["content"].is_string())
            throw SchemaError("chat response has no message content");
        return message["content"].get<std::string>();
    }

private:
    OpenAiClient client_;
};

class OpenAiEmbeddingBackend : public EmbeddingBackend {
public:
    OpenAiEmbeddingBackend(std::string base_url, std::string api_key, std::string model,
                           std::string user_agent)
        : client_(std::move(base_url), std::move(api_key), std::move(user_agent)),
          model_(std::move(model)) {}

    std::vector<float> embed(std::string_view input) override {
        json payload{{"model", model_}, {"input", std::string(input)}};
        json body = client_.post("/v1/embeddings", payload);
        if (!body.contains("data") || !body["data"].is_array() || body["data"].empty())
            throw SchemaError("embedding response has no data");
        const json& vec = body["data"][0].value("embedding", json::array());
        if (!vec.is_array() || vec.empty())
            throw SchemaError("embedding response has no vector");
        std::vector<float> out;
        out.reserve(vec.size());
        for (const json& v : vec) out.push_back(v.get<float>());
        return out;
    }

    std::string model_tag() const override { return model_; }

private:
    OpenAiClient client_;
    std::string model_;
};

class HttpWikiSource : public WikiSource {
public:
    HttpWikiSource(std::string base_url, std::string user_agent)
        : base_url_(std::move(base_url)), user_agent_(std::move(user_agent)) {}

    std::optional<WikiPage> resolve(const std::string& title) override {
        httplib::Params params = page_params();
        params.emplace("titles", title);
        params.emplace("redirects", "1");
        return first_page(query(params));
    }

    std::vector<std::string> search(const std::string& query_text, int limit) override {
        httplib::Params params{{"action", "query"},
                               {"format", "json"},
                               {"formatversion", "2"},
                               {"list", "search"},
                               {"srsearch", query_text},
                               {"srlimit", std::to_string(limit)},
                               {"srprop", ""}};
        json body = query(params);
        std::vector<std::string> titles;
        for (const json& hit : body.value("query", json::object()).value("search", json::array()))
            if (hit.contains("title")) titles.push_back(hit["title"].get<std::string>());
        return titles;
    }

    std::optional<WikiPage> fetch(const std::string& page_id) override {
        httplib::Params params = page_params();
        params.emplace("pageids", page_id);
        return first_page(query(params));
    }

private:
    static httplib::Params page_params() {
        return {{"action", "query"},
                {"format", "json"},
                {"formatversion", "2"},
                {"prop", "extracts|pageprops"},
                {"explaintext", "1"},
                {"exintro", "1"},
                {"exlimit", "1"},
                {"ppprop", "disambiguation"}};
    }

    json query(const httplib::Params& params) {
        std::lock_guard lock(mutex_);
        httplib::Client client(base_url_);
        client.set_connection_timeout(30);
        client.set_read_timeout(60);
        client.set_follow_location(true);
        httplib::Headers headers{{"User-Agent", user_agent_}};
        auto res = client.Get("/w/api.php", params, headers);
        return parse_body(check_response(res, base_url_ + "/w/api.php"),
                          base_url_ + "/w/api.php");
    }

    static std::optional<WikiPage> first_page(const json& body) {
        const json& pages = body.value("query", json::object()).value("pages", json::array());
        if (!pages.is_array() || pages.empty()) return std::nullopt;
        const json& page = pages[0];
        if (page.value("missing", false) || page.value("invalid", false) ||
            !page.contains("pageid"))
            return std::nullopt;
        WikiPage out;
        out.title = page.value("title", "");
        out.page_id = std::to_string(page["pageid"].get<long long>());
        out.extract = page.value("extract", "");
        out.disambiguation = page.contains("pageprops") &&
                             page["pageprops"].contains("disambiguation");
        return out;
    }

    std::string base_url_;
    std::string user_agent_;
    std::mutex mutex_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_openai_chat_backend(std::string base_url, std::string api_key,
                                                      std::string user_agent) {
    return std::make_unique<OpenAiChatBackend>(std::move(base_url), std::move(api_key),
                                               std::move(user_agent));
}

std::unique_ptr<EmbeddingBackend> make_openai_embedding_backend(std::string base_url,
                                                                std::string api_key,
                                                                std::string model,
                                                                std::string user_agent) {
    return std::make_unique<OpenAiEmbeddingBackend>(std::move(base_url), std::move(api_key),
                                                    std::move(model), std::move(user_agent));
}

std::shared_ptr<WikiSource> make_http_wiki_source(std::string base_url, std::string user_agent) {
    return std::make_shared<HttpWikiSource>(std::move(base_url), std::move(user_agent));
}

}  // namespace analogist

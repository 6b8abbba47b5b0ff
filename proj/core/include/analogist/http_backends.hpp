#pragma once

#include "analogist/gateway.hpp"
#include "analogist/wiki.hpp"

#include <memory>
#include <string>

namespace analogist {

// Value of the environment variable, or "" when unset. Live backends check
// the key at call time so fully-cached runs never need one.
std::string api_key_from_env(const std::string& env_var);

// Chat completions client for an OpenAI-compatible API
// (POST {base_url}/v1/chat/completions). Network failures, 429 and 5xx
// surface as TransportError (retryable); auth and malformed-request
// rejections as ConfigError; unusable response bodies as SchemaError.
std::unique_ptr<ChatBackend> make_openai_chat_backend(std::string base_url, std::string api_key,
                                                      std::string user_agent);

// Embeddings client (POST {base_url}/v1/embeddings) with the same error map.
std::unique_ptr<EmbeddingBackend> make_openai_embedding_backend(std::string base_url,
                                                                std::string api_key,
                                                                std::string model,
                                                                std::string user_agent);

// MediaWiki Action API client ({base_url}/w/api.php): resolve follows
// redirects and pulls the plain-text lead extract plus the disambiguation
// page property; search uses the full-text list=search endpoint.
std::shared_ptr<WikiSource> make_http_wiki_source(std::string base_url, std::string user_agent);

}  // namespace analogist

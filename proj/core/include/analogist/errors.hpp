#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace analogist {

// Error families map 1:1 onto CLI exit codes (see README). Keep the
// numbering stable; scripts depend on it.
enum class ErrorFamily {
    Config = 2,      // bad flags, missing pool, malformed config file
    Schema = 3,      // dataset/gold/fixture files that do not parse or validate
    Transport = 4,   // provider or encyclopedia unreachable after retries
    Parse = 5,       // model output unusable after the retry budget
    Replay = 6,      // replay store has no recording for a request
    Exhausted = 7,   // a pipeline ran out of verified candidates or attempts
    Degenerate = 8,  // input too degenerate to compute on (constant rankings, ...)
};

inline std::string to_string(ErrorFamily family) {
    switch (family) {
        case ErrorFamily::Config: return "config";
        case ErrorFamily::Schema: return "schema";
        case ErrorFamily::Transport: return "transport";
        case ErrorFamily::Parse: return "parse";
        case ErrorFamily::Replay: return "replay";
        case ErrorFamily::Exhausted: return "exhausted";
        case ErrorFamily::Degenerate: return "degenerate";
    }
    return "?";
}

inline std::optional<ErrorFamily> error_family_from_string(const std::string& name) {
    if (name == "config") return ErrorFamily::Config;
    if (name == "schema") return ErrorFamily::Schema;
    if (name == "transport") return ErrorFamily::Transport;
    if (name == "parse") return ErrorFamily::Parse;
    if (name == "replay") return ErrorFamily::Replay;
    if (name == "exhausted") return ErrorFamily::Exhausted;
    if (name == "degenerate") return ErrorFamily::Degenerate;
    return std::nullopt;
}

class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, const std::string& what)
        : std::runtime_error(what), family_(family) {}

    ErrorFamily family() const { return family_; }
    int exit_code() const { return static_cast<int>(family_); }

private:
    ErrorFamily family_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorFamily::Config, what) {}
};

struct SchemaError : Error {
    explicit SchemaError(const std::string& what) : Error(ErrorFamily::Schema, what) {}
};

struct DuplicateIdError : SchemaError {
    explicit DuplicateIdError(const std::string& what) : SchemaError(what) {}
};

struct ModelTagMismatch : ConfigError {
    explicit ModelTagMismatch(const std::string& what) : ConfigError(what) {}
};

struct EmptyIndex : ConfigError {
    explicit EmptyIndex(const std::string& what) : ConfigError(what) {}
};

struct TransportError : Error {
    explicit TransportError(const std::string& what) : Error(ErrorFamily::Transport, what) {}
};

// A verified page disappeared between verify() and fetch_description().
// Reported in the transport family but deliberately NOT a TransportError
// subclass: retry loops must not treat a deleted page as a flaky link.
struct GonePageError : Error {
    explicit GonePageError(const std::string& what) : Error(ErrorFamily::Transport, what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(ErrorFamily::Parse, what) {}
};

// Judge emitted a score outside the 1-4 rubric. Retryable like ParseError.
struct ScoreOutOfRange : ParseError {
    explicit ScoreOutOfRange(const std::string& what) : ParseError(what) {}
};

struct UnboundPlaceholder : ParseError {
    explicit UnboundPlaceholder(const std::string& what) : ParseError(what) {}
};

struct ReplayMiss : Error {
    explicit ReplayMiss(const std::string& what) : Error(ErrorFamily::Replay, what) {}
};

struct ExhaustedRetries : Error {
    explicit ExhaustedRetries(const std::string& what) : Error(ErrorFamily::Exhausted, what) {}
};

// A proposal round ended with zero verified candidates even after the refill.
struct EmptyRound : ExhaustedRetries {
    explicit EmptyRound(const std::string& what) : ExhaustedRetries(what) {}
};

struct EmptyDomain : Error {
    explicit EmptyDomain(const std::string& what) : Error(ErrorFamily::Exhausted, what) {}
};

struct DegenerateInput : Error {
    explicit DegenerateInput(const std::string& what) : Error(ErrorFamily::Degenerate, what) {}
};

}  // namespace analogist

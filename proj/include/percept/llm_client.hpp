#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include "percept/errors.hpp"

namespace percept {

// ---- Error taxonomy ---------------------------------------------------------

class LlmError : public Error {
public:
    LlmError(const std::string& what, int status, bool retryable)
        : Error(what), status(status), retryable(retryable) {}
    int status;
    bool retryable;
};

class AuthFailure : public LlmError {
public:
    explicit AuthFailure(const std::string& what, int status = 401)
        : LlmError(what, status, false) {}
};

class RateLimited : public LlmError {
public:
    explicit RateLimited(const std::string& what) : LlmError(what, 429, true) {}
};

class RequestTimeout : public LlmError {
public:
    explicit RequestTimeout(const std::string& what) : LlmError(what, 0, true) {}
};

class MalformedResponse : public LlmError {
public:
    explicit MalformedResponse(const std::string& what) : LlmError(what, 200, false) {}
};

class ServerError : public LlmError {
public:
    ServerError(const std::string& what, int status) : LlmError(what, status, true) {}
};

/// Replay-mode lookup failed; no network call was attempted.
class CacheMiss : public Error {
public:
    explicit CacheMiss(const std::string& what) : Error(what) {}
};

// ---- Types ------------------------------------------------------------------

/// One provider endpoint. API keys are never stored in config files; only the
/// name of the environment variable holding the key is.
struct BackendConfig {
    std::string name{"default"};
    std::string base_url;                 // e.g. "http://localhost:8080"
    std::string path{"/v1/chat/completions"};
    std::string model_id;
    std::string api_key_env;              // empty = no auth header
    double temperature{0.0};
    int max_output_tokens{512};
    double request_timeout_seconds{30.0};

    void validate() const;
};

struct TokenUsage {
    int prompt_tokens{-1};  // -1 = not reported
    int completion_tokens{-1};
};

struct CompletionRequest {
    std::string prompt;
    BackendConfig config;
};

struct CompletionResponse {
    std::string text;
    TokenUsage usage;
    double latency_seconds{0.0};
    bool from_cache{false};
};

struct CacheEntry {
    std::string key;        // sha256(model_id, temperature, sha256(prompt))
    std::string model_id;
    double temperature{0.0};
    std::string prompt_sha;
    std::string response_text;
    TokenUsage usage;
    std::int64_t timestamp{0};
};

/// Canonical temperature representation used inside cache keys.
std::string format_temperature(double temperature);
std::string prompt_sha(std::string_view prompt);
std::string cache_key(std::string_view model_id, double temperature,
                      std::string_view prompt);
/// Key recomputed from an entry's stored fields; must equal entry.key.
std::string cache_key_for_entry(const CacheEntry& entry);

// ---- Client -----------------------------------------------------------------

enum class ClientMode {
    Live,    // cache first, then the transport
    Replay,  // cache only; a miss is an error
};

struct HttpResult {
    int status{0};
    std::string body;
    bool timed_out{false};
    std::string error;  // transport-level failure, empty when none
};

/// One chat-style request against a backend. Injectable for tests; the
/// default performs HTTP against config.base_url + config.path. The api key
/// is already resolved from the environment (empty when not configured).
using Transport = std::function<HttpResult(
    const BackendConfig& config, const std::string& body_json, const std::string& api_key)>;

/// In-process completion function (deterministic mocks).
using LocalBackend = std::function<std::string(const std::string& prompt)>;

struct ClientOptions {
    ClientMode mode{ClientMode::Live};
    int max_retries{3};                // retries after the initial attempt: 1/2/4 s
    double backoff_base_seconds{1.0};
    double jitter_fraction{0.25};      // uniform extra delay, fraction of the backoff
    int max_in_flight{4};
};

/// Provider-agnostic completion client with an append-only response cache.
/// Thread-safe for concurrent complete() calls; configure (set_transport etc.)
/// before sharing across threads.
class CompletionClient {
public:
    explicit CompletionClient(ClientOptions options = {});

    void set_transport(Transport transport);
    void set_local_backend(LocalBackend backend);
    /// Replaces the real clock sleep; tests pass a recorder.
    void set_sleeper(std::function<void(double seconds)> sleeper);

    /// Cache hit returns the stored response without any network activity.
    /// Otherwise issues the request (retrying retryable failures) and stores
    /// the response. In replay mode a miss throws CacheMiss instead.
    CompletionResponse complete(const BackendConfig& config, const std::string& prompt);

    std::size_t cache_size() const;
    /// Writes the cache as newline-delimited JSON, sorted by key; returns the
    /// number of entries written.
    std::size_t cache_export(const std::string& path) const;
    /// Merges entries from a cache file; existing keys are kept (idempotent).
    /// A corrupt line aborts the whole import, naming the line number, and
    /// leaves the cache unchanged. Returns the number of entries in the file.
    std::size_t cache_import(const std::string& path);

    /// The default live HTTP transport (plain HTTP; HTTPS needs a TLS-enabled
    /// build of the underlying client).
    static Transport http_transport();

private:
    CompletionResponse request_once(const BackendConfig& config, const std::string& prompt,
                                    const std::string& api_key);
    CompletionResponse request_with_retries(const BackendConfig& config,
                                            const std::string& prompt);

    ClientOptions options_;
    Transport transport_;
    LocalBackend local_backend_;
    std::function<void(double)> sleeper_;
    mutable std::mutex cache_mutex_;
    std::map<std::string, CacheEntry> cache_;
    std::mutex in_flight_mutex_;
    std::condition_variable in_flight_cv_;
    int in_flight_{0};
    std::mutex jitter_mutex_;
    std::uint64_t jitter_state_{0x6a09e667f3bcc908ULL};
};

}  // namespace percept

#include "percept/llm_client.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "percept/rng.hpp"
#include "percept/sha256.hpp"

namespace percept {

using nlohmann::json;

void BackendConfig::validate() const {
    if (temperature < 0.0) throw InvalidArgument("backend: temperature must be >= 0");
    if (request_timeout_seconds <= 0.0) {
        throw InvalidArgument("backend: request timeout must be positive");
    }
    if (model_id.empty()) throw InvalidArgument("backend: model_id must be set");
}

std::string format_temperature(double temperature) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", temperature);
    return buf;
}

std::string prompt_sha(std::string_view prompt) { return sha256_hex(prompt); }

std::string cache_key(std::string_view model_id, double temperature,
                      std::string_view prompt) {
    std::string material(model_id);
    material += '\x1f';
    material += format_temperature(temperature);
    material += '\x1f';
    material += prompt_sha(prompt);
    return sha256_hex(material);
}

std::string cache_key_for_entry(const CacheEntry& entry) {
    std::string material = entry.model_id;
    material += '\x1f';
    material += format_temperature(entry.temperature);
    material += '\x1f';
    material += entry.prompt_sha;
    return sha256_hex(material);
}

CompletionClient::CompletionClient(ClientOptions options) : options_(options) {
    sleeper_ = [](double seconds) {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
}

void CompletionClient::set_transport(Transport transport) {
    transport_ = std::move(transport);
}

void CompletionClient::set_local_backend(LocalBackend backend) {
    local_backend_ = std::move(backend);
}

void CompletionClient::set_sleeper(std::function<void(double)> sleeper) {
    sleeper_ = std::move(sleeper);
}

namespace {

std::string build_chat_body(const BackendConfig& config, const std::string& prompt) {
    // Single-turn chat shape: the whole rendered prompt is one user message.
    json body;
    body["model"] = config.model_id;
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = config.temperature;
    body["max_tokens"] = config.max_output_tokens;
    return body.dump();
}

CompletionResponse parse_chat_response(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& ex) {
        throw MalformedResponse(std::string("completion response is not JSON: ") +
                                ex.what());
    }
    CompletionResponse out;
    try {
        const json& choices = doc.at("choices");
        if (choices.empty()) throw MalformedResponse("completion response has no choices");
        const json& message = choices.at(0).at("message");
        out.text = message.at("content").get<std::string>();
    } catch (const json::exception&) {
        throw MalformedResponse("completion response missing choices[0].message.content");
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
        out.usage.prompt_tokens = doc["usage"].value("prompt_tokens", -1);
        out.usage.completion_tokens = doc["usage"].value("completion_tokens", -1);
    }
    return out;
}

}  // namespace

CompletionResponse CompletionClient::request_once(const BackendConfig& config,
                                                  const std::string& prompt,
                                                  const std::string& api_key) {
    const std::string body = build_chat_body(config, prompt);

    {
        std::unique_lock<std::mutex> lock(in_flight_mutex_);
        in_flight_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
    }
    HttpResult result;
    const auto start = std::chrono::steady_clock::now();
    try {
        result = transport_(config, body, api_key);
    } catch (...) {
        std::lock_guard<std::mutex> lock(in_flight_mutex_);
        --in_flight_;
        in_flight_cv_.notify_one();
        throw;
    }
    {
        std::lock_guard<std::mutex> lock(in_flight_mutex_);
        --in_flight_;
        in_flight_cv_.notify_one();
    }

    if (result.timed_out) {
        throw RequestTimeout("completion request timed out against " + config.base_url);
    }
    if (!result.error.empty()) {
        throw RequestTimeout("transport failure against " + config.base_url + ": " +
                             result.error);
    }
    if (result.status == 401 || result.status == 403) {
        throw AuthFailure("authentication rejected by " + config.base_url +
                              " (check $" + config.api_key_env + ")",
                          result.status);
    }
    if (result.status == 429) {
        throw RateLimited("rate limited by " + config.base_url);
    }
    if (result.status >= 500) {
        throw ServerError("server error " + std::to_string(result.status) + " from " +
                              config.base_url,
                          result.status);
    }
    if (result.status != 200) {
        throw LlmError("unexpected status " + std::to_string(result.status) + " from " +
                           config.base_url,
                       result.status, false);
    }
    CompletionResponse response = parse_chat_response(result.body);
    response.latency_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return response;
}

CompletionResponse CompletionClient::request_with_retries(const BackendConfig& config,
                                                          const std::string& prompt) {
    std::string api_key;
    if (!config.api_key_env.empty()) {
        const char* value = std::getenv(config.api_key_env.c_str());
        if (value == nullptr || *value == '\0') {
            throw AuthFailure("environment variable " + config.api_key_env +
                              " is not set");
        }
        api_key = value;
    }
    for (int attempt = 0;; ++attempt) {
        try {
            return request_once(config, prompt, api_key);
        } catch (const LlmError& err) {
            if (!err.retryable || attempt >= options_.max_retries) throw;
            double jitter;
            {
                std::lock_guard<std::mutex> lock(jitter_mutex_);
                jitter_state_ = splitmix64_mix(jitter_state_);
                jitter = static_cast<double>(jitter_state_ >> 11) * 0x1.0p-53;
            }
            const double delay = options_.backoff_base_seconds *
                                 static_cast<double>(1ULL << attempt) *
                                 (1.0 + options_.jitter_fraction * jitter);
            sleeper_(delay);
        }
    }
}

CompletionResponse CompletionClient::complete(const BackendConfig& config,
                                              const std::string& prompt) {
    config.validate();
    const std::string key = cache_key(config.model_id, config.temperature, prompt);
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            CompletionResponse response;
            response.text = it->second.response_text;
            response.usage = it->second.usage;
            response.from_cache = true;
            return response;
        }
    }
    if (options_.mode == ClientMode::Replay) {
        throw CacheMiss("replay cache has no entry for model " + config.model_id +
                        ", prompt sha " + prompt_sha(prompt));
    }

    CompletionResponse response;
    if (local_backend_) {
        response.text = local_backend_(prompt);
    } else {
        if (!transport_) transport_ = http_transport();
        response = request_with_retries(config, prompt);
    }

    CacheEntry entry;
    entry.key = key;
    entry.model_id = config.model_id;
    entry.temperature = config.temperature;
    entry.prompt_sha = prompt_sha(prompt);
    entry.response_text = response.text;
    entry.usage = response.usage;
    entry.timestamp =
        static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                      std::chrono::system_clock::now().time_since_epoch())
                                      .count());
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        cache_.emplace(key, std::move(entry));  // first writer wins, never duplicated
    }
    return response;
}

std::size_t CompletionClient::cache_size() const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    return cache_.size();
}

std::size_t CompletionClient::cache_export(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open cache file for writing: " + path);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    for (const auto& [key, entry] : cache_) {  // std::map: sorted by key
        json line;
        line["key"] = entry.key;
        line["model_id"] = entry.model_id;
        line["temperature"] = entry.temperature;
        line["prompt_sha"] = entry.prompt_sha;
        line["response_text"] = entry.response_text;
        line["usage"] = {{"prompt_tokens", entry.usage.prompt_tokens},
                         {"completion_tokens", entry.usage.completion_tokens}};
        line["timestamp"] = entry.timestamp;
        out << line.dump() << "\n";
    }
    return cache_.size();
}

std::size_t CompletionClient::cache_import(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open cache file: " + path);
    std::vector<CacheEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
            CacheEntry entry;
            entry.key = doc.at("key").get<std::string>();
            entry.model_id = doc.at("model_id").get<std::string>();
            entry.temperature = doc.at("temperature").get<double>();
            entry.prompt_sha = doc.at("prompt_sha").get<std::string>();
            entry.response_text = doc.at("response_text").get<std::string>();
            if (doc.contains("usage")) {
                entry.usage.prompt_tokens = doc["usage"].value("prompt_tokens", -1);
                entry.usage.completion_tokens = doc["usage"].value("completion_tokens", -1);
            }
            entry.timestamp = doc.value("timestamp", static_cast<std::int64_t>(0));
            if (cache_key_for_entry(entry) != entry.key) {
                throw Error("key does not match its request fields");
            }
            entries.push_back(std::move(entry));
        } catch (const std::exception& ex) {
            throw Error("cache import aborted: corrupt entry at line " +
                        std::to_string(line_no) + " of " + path + ": " + ex.what());
        }
    }
    // All lines parsed; commit atomically.
    std::lock_guard<std::mutex> lock(cache_mutex_);
    for (CacheEntry& entry : entries) {
        std::string key = entry.key;
        cache_.emplace(std::move(key), std::move(entry));
    }
    return entries.size();
}

Transport CompletionClient::http_transport() {
    return [](const BackendConfig& config, const std::string& body,
              const std::string& api_key) -> HttpResult {
        httplib::Client client(config.base_url);
        if (!client.is_valid()) {
            return HttpResult{0, "", false, "invalid base url: " + config.base_url};
        }
        const auto timeout =
            std::chrono::milliseconds(static_cast<int>(config.request_timeout_seconds * 1000));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key);
        }
        httplib::Result result = client.Post(config.path, headers, body, "application/json");
        if (!result) {
            const bool timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                                   result.error() == httplib::Error::Read ||
                                   result.error() == httplib::Error::Write;
            return HttpResult{0, "", timed_out, httplib::to_string(result.error())};
        }
        return HttpResult{result->status, result->body, false, ""};
    };
}

}  // namespace percept

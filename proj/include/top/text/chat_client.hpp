#pragma once

// OpenAI-style chat-completion client used as the preference extractor and
// the paraphrase generator of the text pipeline.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "top/core/types.hpp"
#include "top/error.hpp"
#include "top/rng.hpp"
#include "top/text/likelihood.hpp"

namespace top::text {

inline constexpr std::ptrdiff_t kMaxInFlightCap = 1024;

struct ChatEndpointConfig {
    /// http(s)://host[:port][/prefix]; requests go to <prefix>/chat/completions.
    /// "mock://echo" selects the built-in echo provider.
    std::string base_url = "mock://echo";
    std::string model = "gpt-4";
    /// Environment variable holding the bearer token; unset means no auth header.
    std::string api_key_env = "TOP_API_KEY";
    double timeout_s = 60.0;
    int max_retries = 2;
    double temperature = 0.7;
    double backoff_initial_s = 0.5;
    std::size_t max_in_flight = 4;
    bool request_logprobs = false;
    /// Echo provider reply prefix.
    std::string mock_prefix;

    void validate() const {
        if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
        if (model.empty()) throw ConfigError("endpoint model is empty");
        if (!(timeout_s > 0.0) || !std::isfinite(timeout_s)) throw ConfigError("endpoint timeout must be > 0");
        if (max_retries < 0) throw ConfigError("endpoint max_retries must be >= 0");
        if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be >= 0");
        if (!(backoff_initial_s >= 0.0) || !std::isfinite(backoff_initial_s))
            throw ConfigError("backoff_initial_s must be >= 0");
        if (max_in_flight < 1 || max_in_flight > static_cast<std::size_t>(kMaxInFlightCap))
            throw ConfigError("max_in_flight must be in [1, 1024]");
    }
};

class EndpointError : public Error {
public:
    enum class Kind { transport, status, malformed };

    EndpointError(Kind kind, int status, const std::string& what) : Error(what), kind_(kind), status_(status) {}

    Kind kind() const noexcept { return kind_; }
    /// Final HTTP status, 0 when no response was received.
    int status() const noexcept { return status_; }

private:
    Kind kind_;
    int status_;
};

/// status == 0 means the request never produced a response; `error` says why.
struct HttpResponse {
    int status = 0;
    std::string body;
    std::string error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& body, const std::string& bearer) = 0;
};

class HttplibTransport : public Transport {
public:
    explicit HttplibTransport(const ChatEndpointConfig& cfg) : timeout_s_(cfg.timeout_s) {
        const std::string& url = cfg.base_url;
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw ConfigError("endpoint base_url lacks a scheme: " + url);
        const std::string scheme = url.substr(0, scheme_end);
        if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme: " + scheme);
        const auto path_start = url.find('/', scheme_end + 3);
        origin_ = url.substr(0, path_start);
        std::string prefix = path_start == std::string::npos ? std::string{} : url.substr(path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        path_ = prefix + "/chat/completions";
    }

    HttpResponse post(const std::string& body, const std::string& bearer) override {
        httplib::Client cli(origin_);
        const auto secs = static_cast<time_t>(timeout_s_);
        const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
        auto res = cli.Post(path_, headers, body, "application/json");
        if (!res) return HttpResponse{0, {}, httplib::to_string(res.error())};
        return HttpResponse{res->status, res->body, {}};
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::string origin_;
    std::string path_;
    double timeout_s_;
};

/// Replies prefix + last line of the final message; records every request body.
class MockEchoTransport : public Transport {
public:
    explicit MockEchoTransport(std::string prefix = {}) : prefix_(std::move(prefix)) {}

    HttpResponse post(const std::string& body, const std::string&) override {
        std::string prompt;
        {
            std::lock_guard lock(mu_);
            requests_.push_back(body);
        }
        try {
            prompt = nlohmann::json::parse(body).at("messages").back().at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            return HttpResponse{400, nlohmann::json{{"error", e.what()}}.dump(), {}};
        }
        const auto nl = prompt.rfind('\n');
        const std::string last = nl == std::string::npos ? prompt : prompt.substr(nl + 1);
        nlohmann::json reply = {
            {"object", "chat.completion"},
            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", prefix_ + last}}}}}}};
        return HttpResponse{200, reply.dump(), {}};
    }

    std::vector<std::string> requests() const {
        std::lock_guard lock(mu_);
        return requests_;
    }

private:
    std::string prefix_;
    mutable std::mutex mu_;
    std::vector<std::string> requests_;
};

inline std::shared_ptr<Transport> make_transport(const ChatEndpointConfig& cfg) {
    if (cfg.base_url.rfind("mock://", 0) == 0) {
        if (cfg.base_url != "mock://echo") throw ConfigError("unknown mock provider: " + cfg.base_url);
        return std::make_shared<MockEchoTransport>(cfg.mock_prefix);
    }
    return std::make_shared<HttplibTransport>(cfg);
}

struct ChatReply {
    std::string content;
    std::optional<TokenLogProbs> logprobs;
    int attempts = 0;
};

inline std::string build_request_body(const ChatEndpointConfig& cfg, const std::string& prompt) {
    nlohmann::json body = {{"model", cfg.model},
                           {"messages", {{{"role", "user"}, {"content", prompt}}}},
                           {"temperature", cfg.temperature}};
    if (cfg.request_logprobs) body["logprobs"] = true;
    return body.dump();
}

/// Reads choices[0].message.content and, when present, choices[0].logprobs.
inline ChatReply parse_chat_response(const std::string& body) {
    ChatReply out;
    try {
        const auto j = nlohmann::json::parse(body);
        const auto& choice = j.at("choices").at(0);
        out.content = choice.at("message").at("content").get<std::string>();
        if (choice.contains("logprobs") && !choice.at("logprobs").is_null())
            out.logprobs = logprobs_from_json(choice.at("logprobs"));
    } catch (const nlohmann::json::exception& e) {
        throw EndpointError(EndpointError::Kind::malformed, 200, std::string("malformed chat response: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw EndpointError(EndpointError::Kind::malformed, 200, std::string("malformed chat logprobs: ") + e.what());
    }
    return out;
}

inline bool retryable_status(int status) { return status == 429 || status >= 500; }

class ChatClient {
public:
    using Sleeper = std::function<void(double seconds)>;

    explicit ChatClient(ChatEndpointConfig cfg, std::shared_ptr<Transport> transport = nullptr,
                        Sleeper sleeper = nullptr, std::uint64_t jitter_seed = 0)
        : cfg_((cfg.validate(), std::move(cfg))),
          transport_(transport ? std::move(transport) : make_transport(cfg_)),
          sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)),
          slots_(static_cast<std::ptrdiff_t>(cfg_.max_in_flight)),
          jitter_(jitter_seed) {}

    const ChatEndpointConfig& config() const noexcept { return cfg_; }

    /// Delay before retry k (0-based): initial * 2^k * (1 + u), u uniform in [-0.2, 0.2].
    double backoff_delay(int k) {
        double u;
        {
            std::lock_guard lock(jitter_mu_);
            u = jitter_.uniform(-0.2, 0.2);
        }
        return cfg_.backoff_initial_s * std::ldexp(1.0, k) * (1.0 + u);
    }

    /// Safe for concurrent use; at most max_in_flight requests are outstanding.
    ChatReply complete(const std::string& prompt) {
        const std::string body = build_request_body(cfg_, prompt);
        const char* key = cfg_.api_key_env.empty() ? nullptr : std::getenv(cfg_.api_key_env.c_str());
        const std::string bearer = key ? key : "";
        HttpResponse last;
        const int attempts = cfg_.max_retries + 1;
        for (int a = 0; a < attempts; ++a) {
            if (a > 0) sleeper_(backoff_delay(a - 1));
            {
                slots_.acquire();
                try {
                    last = transport_->post(body, bearer);
                } catch (...) {
                    slots_.release();
                    throw;
                }
                slots_.release();
            }
            if (last.status >= 200 && last.status < 300) {
                ChatReply reply = parse_chat_response(last.body);
                reply.attempts = a + 1;
                return reply;
            }
            if (last.status != 0 && !retryable_status(last.status))
                throw EndpointError(EndpointError::Kind::status, last.status,
                                    "endpoint returned status " + std::to_string(last.status) + ": " +
                                        snippet(last.body));
        }
        if (last.status == 0)
            throw EndpointError(EndpointError::Kind::transport, 0,
                                "endpoint unreachable after " + std::to_string(attempts) + " attempts: " + last.error);
        throw EndpointError(EndpointError::Kind::status, last.status,
                            "endpoint returned status " + std::to_string(last.status) + " after " +
                                std::to_string(attempts) + " attempts");
    }

private:
    static void default_sleep(double s) {
        if (s > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
    }

    static std::string snippet(const std::string& body) { return body.size() > 200 ? body.substr(0, 200) + "..." : body; }

    ChatEndpointConfig cfg_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    std::counting_semaphore<kMaxInFlightCap> slots_;
    std::mutex jitter_mu_;
    Rng jitter_;
};

inline Preference extract_preference(ChatClient& client, const std::string& prompt) {
    return Preference::text(client.complete(prompt).content);
}

inline Preference extract_preference(const ChatEndpointConfig& cfg, const std::string& prompt) {
    ChatClient client(cfg);
    return extract_preference(client, prompt);
}

inline std::string paraphrase_text(ChatClient& client, const std::string& prompt) {
    return client.complete(prompt).content;
}

inline std::string paraphrase_text(const ChatEndpointConfig& cfg, const std::string& prompt) {
    ChatClient client(cfg);
    return paraphrase_text(client, prompt);
}

} // namespace top::text

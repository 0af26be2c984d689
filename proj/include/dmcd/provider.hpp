#ifndef DMCD_PROVIDER_HPP
#define DMCD_PROVIDER_HPP

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

// httplib drags in <resolv.h>, whose _res macro breaks Eigen headers that use
// _res as a parameter name.
#ifdef _res
#undef _res
#endif

#include "dmcd/errors.hpp"
#include "dmcd/rng.hpp"

namespace dmcd {

struct Prompt {
    std::string system_text;
    std::string user_text;
    std::string response_schema;  // human-readable description embedded in the prompt

    std::string digest() const { return digest_hex(system_text + "\x1f" + user_text); }
};

struct ProviderConfig {
    std::string endpoint = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-5.2";
    double temperature = 0.0;
    int timeout_seconds = 120;
    int max_retries = 3;
    double retry_backoff_seconds = 1.0;
    std::string credential_env = "OPENAI_API_KEY";
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const Prompt& prompt) = 0;
};

// OpenAI-compatible chat-completions client. Transient failures (429, 5xx,
// transport errors) are retried with linear backoff up to max_retries.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {}

    std::string complete(const Prompt& prompt) override {
        const char* key = std::getenv(cfg_.credential_env.c_str());
        if (key == nullptr || *key == '\0')
            throw AuthError("credential environment variable not set: " + cfg_.credential_env);

        nlohmann::json body = {
            {"model", cfg_.model},
            {"temperature", cfg_.temperature},
            {"messages",
             {{{"role", "system"}, {"content", prompt.system_text}},
              {{"role", "user"}, {"content", prompt.user_text}}}},
        };
        const std::string payload = body.dump();

        httplib::Client client(cfg_.endpoint);
        client.set_connection_timeout(cfg_.timeout_seconds);
        client.set_read_timeout(cfg_.timeout_seconds);
        client.set_bearer_token_auth(key);

        int attempt = 0;
        for (;;) {
            auto res = client.Post(cfg_.path, payload, "application/json");
            if (res) {
                if (res->status == 200) return extract_content(res->body);
                if (res->status == 401 || res->status == 403)
                    throw AuthError("provider rejected credentials (HTTP " +
                                    std::to_string(res->status) + ")");
                if (res->status != 429 && res->status < 500)
                    throw MalformedResponseBody("unexpected HTTP status " +
                                                std::to_string(res->status));
            }
            if (attempt >= cfg_.max_retries) {
                if (res && res->status == 429) throw RateLimited("rate limited after retries");
                if (!res) throw Timeout("transport failure after retries");
                throw MalformedResponseBody("HTTP " + std::to_string(res->status) +
                                            " after retries");
            }
            ++attempt;
            std::this_thread::sleep_for(std::chrono::duration<double>(
                cfg_.retry_backoff_seconds * attempt));
        }
    }

private:
    static std::string extract_content(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            throw MalformedResponseBody("response body is not valid JSON");
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            throw MalformedResponseBody("response has no choices");
        const auto& msg = j["choices"][0];
        if (!msg.contains("message") || !msg["message"].contains("content") ||
            !msg["message"]["content"].is_string())
            throw MalformedResponseBody("response choice has no message content");
        return msg["message"]["content"].get<std::string>();
    }

    ProviderConfig cfg_;
};

// Deterministic record/replay provider: a directory of <digest>.txt files,
// one per prompt. Fails closed when no recording exists for a digest.
class MockProvider : public Provider {
public:
    explicit MockProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::string complete(const Prompt& prompt) override {
        const auto it = in_memory_.find(prompt.digest());
        if (it != in_memory_.end()) return it->second;
        const auto file = dir_ / (prompt.digest() + ".txt");
        std::ifstream in(file);
        if (!in) throw MockMissError("no recorded response for prompt digest " + prompt.digest());
        std::ostringstream out;
        out << in.rdbuf();
        return out.str();
    }

    void record(const Prompt& prompt, const std::string& response) {
        in_memory_[prompt.digest()] = response;
    }

    void record_to_disk(const Prompt& prompt, const std::string& response) const {
        std::filesystem::create_directories(dir_);
        std::ofstream out(dir_ / (prompt.digest() + ".txt"));
        out << response;
    }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> in_memory_;
};

// Scripted provider for tests: answers prompts in the order given.
class SequenceProvider : public Provider {
public:
    explicit SequenceProvider(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string complete(const Prompt&) override {
        if (next_ >= responses_.size()) throw MockMissError("sequence provider exhausted");
        return responses_[next_++];
    }

    std::size_t calls() const { return next_; }

private:
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
};

}  // namespace dmcd

#endif

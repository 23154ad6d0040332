#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gradeloop/llm_gateway/gateway.hpp"

namespace gradeloop::llm {

/// Lowercase hex SHA-256 of a prompt; the key used by mock fixtures.
std::string prompt_hash(std::string_view prompt);

/// In-process provider for tests and offline runs. Scripted steps are
/// consumed first, then exact prompt-hash fixtures, then substring rules,
/// then the default response.
class MockProvider : public Provider {
public:
    struct Step {
        enum class Kind { Respond, Unavailable, Timeout, Quota, Fatal };
        Kind kind = Kind::Respond;
        std::string text;

        static Step respond(std::string text) { return {Kind::Respond, std::move(text)}; }
        static Step fail(Kind kind) { return {kind, {}}; }
    };

    explicit MockProvider(std::string id = "mock") : id_(std::move(id)) {}

    /// Fixture file: {"default": text?, "responses": {sha256: text}, "rules": [{"contains": s, "response": text}]}
    static std::shared_ptr<MockProvider> from_fixture_file(const std::filesystem::path& path);

    void enqueue(Step step);
    void enqueue_response(std::string text) { enqueue(Step::respond(std::move(text))); }
    void add_fixture(std::string hash, std::string text);
    void add_rule(std::string needle, std::string text);
    void set_default(std::string text);
    void set_reachable(bool reachable);

    std::string id() const override { return id_; }
    std::string complete(const std::string& prompt, const GenerationConfig& config) override;
    bool probe() override;

    int calls() const;
    std::vector<std::string> prompts() const;
    std::optional<GenerationConfig> last_config() const;

private:
    std::string id_;
    mutable std::mutex mu_;
    std::deque<Step> script_;
    std::map<std::string, std::string> fixtures_;
    std::vector<std::pair<std::string, std::string>> rules_;
    std::optional<std::string> default_;
    bool reachable_ = true;
    std::vector<std::string> prompts_;
    std::optional<GenerationConfig> last_config_;
};

enum class ProviderKind { Mock, OpenAiCompatible, Gemini };

struct ProviderSettings {
    ProviderKind kind = ProviderKind::Mock;
    std::string endpoint;  // e.g. https://api.openai.com or https://generativelanguage.googleapis.com
    std::string api_key;
    std::string model;
    std::chrono::milliseconds timeout{60'000};
    std::filesystem::path mock_fixture;

    /// Reads GRADELOOP_LLM_{PROVIDER,ENDPOINT,API_KEY,MODEL,TIMEOUT_MS} and
    /// GRADELOOP_MOCK_FIXTURE. Unset variables keep the values in `base`.
    static ProviderSettings from_environment(ProviderSettings base);
    static ProviderSettings from_environment();
};

std::optional<ProviderKind> parse_provider_kind(std::string_view name);

/// Hosted completion API over HTTPS (or HTTP for local gateways).
class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderSettings settings);

    std::string id() const override;
    std::string complete(const std::string& prompt, const GenerationConfig& config) override;
    bool probe() override;

    /// Request body sent for a prompt; exposed for tests.
    std::string request_body(const std::string& prompt, const GenerationConfig& config) const;
    std::string request_path() const;
    /// Pulls the completion text out of a provider reply. Throws TransportError.
    std::string extract_text(const std::string& body) const;

private:
    ProviderSettings settings_;
};

std::shared_ptr<Provider> make_provider(const ProviderSettings& settings);

}  // namespace gradeloop::llm

#include "gradeloop/llm_gateway/providers.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

namespace gradeloop::llm {
namespace {

using nlohmann::json;

std::string hex(const unsigned char* data, std::size_t n) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out += kDigits[data[i] >> 4];
        out += kDigits[data[i] & 0xF];
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

const char* env(const char* name) {
    const char* v = std::getenv(name);
    return v && *v ? v : nullptr;
}

/// "https://host:443/prefix" -> {"https://host:443", "/prefix"}
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint needs a scheme: " + url);
    const auto path_at = url.find('/', scheme_end + 3);
    if (path_at == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_at);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_at), prefix};
}

std::string default_endpoint(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::OpenAiCompatible: return "https://api.openai.com";
        case ProviderKind::Gemini: return "https://generativelanguage.googleapis.com";
        case ProviderKind::Mock: break;
    }
    return {};
}

MockProvider::Step::Kind to_kind(std::string_view s) {
    using K = MockProvider::Step::Kind;
    if (s == "unavailable") return K::Unavailable;
    if (s == "timeout") return K::Timeout;
    if (s == "quota") return K::Quota;
    if (s == "fatal") return K::Fatal;
    throw std::invalid_argument("unknown mock failure kind: " + std::string(s));
}

}  // namespace

std::string prompt_hash(std::string_view prompt) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(prompt.data(), prompt.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    return hex(digest, len);
}

// ---------------------------------------------------------------- mock

std::shared_ptr<MockProvider> MockProvider::from_fixture_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read mock fixture " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error("bad mock fixture " + path.string() + ": " + e.what());
    }
    auto mock = std::make_shared<MockProvider>(doc.value("provider_id", std::string("mock")));
    if (doc.contains("default")) mock->set_default(doc.at("default").get<std::string>());
    if (doc.contains("responses"))
        for (const auto& [hash, text] : doc.at("responses").items()) mock->add_fixture(lower(hash), text.get<std::string>());
    if (doc.contains("rules"))
        for (const auto& rule : doc.at("rules"))
            mock->add_rule(rule.at("contains").get<std::string>(), rule.at("response").get<std::string>());
    if (doc.contains("script"))
        for (const auto& step : doc.at("script")) {
            if (step.contains("fail")) mock->enqueue(Step::fail(to_kind(step.at("fail").get<std::string>())));
            else mock->enqueue_response(step.at("response").get<std::string>());
        }
    return mock;
}

void MockProvider::enqueue(Step step) {
    std::lock_guard lock(mu_);
    script_.push_back(std::move(step));
}

void MockProvider::add_fixture(std::string hash, std::string text) {
    std::lock_guard lock(mu_);
    fixtures_[std::move(hash)] = std::move(text);
}

void MockProvider::add_rule(std::string needle, std::string text) {
    std::lock_guard lock(mu_);
    rules_.emplace_back(std::move(needle), std::move(text));
}

void MockProvider::set_default(std::string text) {
    std::lock_guard lock(mu_);
    default_ = std::move(text);
}

void MockProvider::set_reachable(bool reachable) {
    std::lock_guard lock(mu_);
    reachable_ = reachable;
}

bool MockProvider::probe() {
    std::lock_guard lock(mu_);
    return reachable_;
}

std::string MockProvider::complete(const std::string& prompt, const GenerationConfig& config) {
    std::lock_guard lock(mu_);
    prompts_.push_back(prompt);
    last_config_ = config;
    if (!script_.empty()) {
        Step step = std::move(script_.front());
        script_.pop_front();
        switch (step.kind) {
            case Step::Kind::Respond: return step.text;
            case Step::Kind::Unavailable: throw TransportError(TransportError::Kind::Unavailable, "scripted outage");
            case Step::Kind::Timeout: throw TransportError(TransportError::Kind::Timeout, "scripted timeout");
            case Step::Kind::Quota: throw TransportError(TransportError::Kind::Quota, "scripted quota");
            case Step::Kind::Fatal: throw TransportError(TransportError::Kind::Fatal, "scripted rejection");
        }
    }
    if (!fixtures_.empty()) {
        auto it = fixtures_.find(prompt_hash(prompt));
        if (it != fixtures_.end()) return it->second;
    }
    for (const auto& [needle, text] : rules_)
        if (prompt.find(needle) != std::string::npos) return text;
    if (default_) return *default_;
    throw TransportError(TransportError::Kind::Fatal, "mock has no response for prompt " + prompt_hash(prompt));
}

int MockProvider::calls() const {
    std::lock_guard lock(mu_);
    return static_cast<int>(prompts_.size());
}

std::vector<std::string> MockProvider::prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
}

std::optional<GenerationConfig> MockProvider::last_config() const {
    std::lock_guard lock(mu_);
    return last_config_;
}

// ---------------------------------------------------------------- settings

std::optional<ProviderKind> parse_provider_kind(std::string_view name) {
    const std::string n = lower(name);
    if (n == "mock") return ProviderKind::Mock;
    if (n == "openai" || n == "openai-compatible") return ProviderKind::OpenAiCompatible;
    if (n == "gemini") return ProviderKind::Gemini;
    return std::nullopt;
}

ProviderSettings ProviderSettings::from_environment() { return from_environment(ProviderSettings{}); }

ProviderSettings ProviderSettings::from_environment(ProviderSettings base) {
    if (const char* v = env("GRADELOOP_LLM_PROVIDER")) {
        auto kind = parse_provider_kind(v);
        if (!kind) throw std::invalid_argument(std::string("unknown provider: ") + v);
        base.kind = *kind;
    }
    if (const char* v = env("GRADELOOP_LLM_ENDPOINT")) base.endpoint = v;
    if (const char* v = env("GRADELOOP_LLM_API_KEY")) base.api_key = v;
    if (const char* v = env("GRADELOOP_LLM_MODEL")) base.model = v;
    if (const char* v = env("GRADELOOP_LLM_TIMEOUT_MS")) {
        const long long ms = std::atoll(v);
        if (ms <= 0) throw std::invalid_argument(std::string("bad GRADELOOP_LLM_TIMEOUT_MS: ") + v);
        base.timeout = std::chrono::milliseconds(ms);
    }
    if (const char* v = env("GRADELOOP_MOCK_FIXTURE")) base.mock_fixture = v;
    return base;
}

// ---------------------------------------------------------------- http

HttpProvider::HttpProvider(ProviderSettings settings) : settings_(std::move(settings)) {
    if (settings_.kind == ProviderKind::Mock) throw std::invalid_argument("HttpProvider cannot be a mock");
    if (settings_.endpoint.empty()) settings_.endpoint = default_endpoint(settings_.kind);
    if (settings_.model.empty()) throw std::invalid_argument("provider model name is required");
    split_endpoint(settings_.endpoint);
}

std::string HttpProvider::id() const {
    return (settings_.kind == ProviderKind::Gemini ? "gemini:" : "openai:") + settings_.model;
}

std::string HttpProvider::request_path() const {
    const std::string prefix = split_endpoint(settings_.endpoint).second;
    if (settings_.kind == ProviderKind::Gemini) return prefix + "/v1beta/models/" + settings_.model + ":generateContent";
    return prefix + "/v1/chat/completions";
}

std::string HttpProvider::request_body(const std::string& prompt, const GenerationConfig& config) const {
    json body;
    if (settings_.kind == ProviderKind::Gemini) {
        body["contents"] = json::array({{{"role", "user"}, {"parts", json::array({{{"text", prompt}}})}}});
        body["generationConfig"] = {{"temperature", config.temperature},
                                    {"topP", config.nucleus_mass},
                                    {"maxOutputTokens", config.max_output_tokens}};
    } else {
        body["model"] = settings_.model;
        body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
        body["temperature"] = config.temperature;
        body["top_p"] = config.nucleus_mass;
        body["max_tokens"] = config.max_output_tokens;
    }
    return body.dump();
}

std::string HttpProvider::extract_text(const std::string& body) const {
    try {
        const json doc = json::parse(body);
        std::string text;
        if (settings_.kind == ProviderKind::Gemini) {
            for (const auto& part : doc.at("candidates").at(0).at("content").at("parts"))
                if (part.contains("text")) text += part.at("text").get<std::string>();
        } else {
            text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        }
        return text;
    } catch (const json::exception& e) {
        throw TransportError(TransportError::Kind::Fatal, std::string("unexpected provider reply: ") + e.what());
    }
}

std::string HttpProvider::complete(const std::string& prompt, const GenerationConfig& config) {
    const auto [base, prefix] = split_endpoint(settings_.endpoint);
    const auto timeout = std::min(settings_.timeout, config.request_timeout);
    httplib::Client client(base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (settings_.kind == ProviderKind::Gemini) headers.emplace("x-goog-api-key", settings_.api_key);
    else if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(request_path(), headers, request_body(prompt, config), "application/json");
    if (!result) {
        const auto err = result.error();
        const auto elapsed = std::chrono::steady_clock::now() - started;
        if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout * 9 / 10))
            throw TransportError(TransportError::Kind::Timeout, "request timed out");
        throw TransportError(TransportError::Kind::Unavailable, "transport error: " + httplib::to_string(err));
    }
    const int status = result->status;
    if (status == 429) throw TransportError(TransportError::Kind::Quota, "HTTP 429");
    if (status == 408 || status == 504) throw TransportError(TransportError::Kind::Timeout, "HTTP " + std::to_string(status));
    if (status >= 500) throw TransportError(TransportError::Kind::Unavailable, "HTTP " + std::to_string(status));
    if (status < 200 || status >= 300) throw TransportError(TransportError::Kind::Fatal, "HTTP " + std::to_string(status));
    return extract_text(result->body);
}

bool HttpProvider::probe() {
    const auto [base, prefix] = split_endpoint(settings_.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::seconds(3));
    client.set_read_timeout(std::chrono::seconds(3));
    // Any HTTP answer, even 404, means the endpoint is reachable.
    return static_cast<bool>(client.Head(prefix.empty() ? "/" : prefix));
}

std::shared_ptr<Provider> make_provider(const ProviderSettings& settings) {
    if (settings.kind != ProviderKind::Mock) return std::make_shared<HttpProvider>(settings);
    if (!settings.mock_fixture.empty()) return MockProvider::from_fixture_file(settings.mock_fixture);
    return std::make_shared<MockProvider>();
}

}  // namespace gradeloop::llm

#include "gradeloop/service_api/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gradeloop::service {
namespace {

constexpr const char* kKeys[] = {
    "host",          "port",           "max_upload_bytes", "grading_deadline_s", "session_ttl_s",
    "grading_workers", "llm_concurrency", "solutions",      "students",           "identities",
    "usage_log",     "prompts_dir",    "llm_provider",     "llm_endpoint",       "llm_api_key",
    "llm_model",     "llm_timeout_ms", "mock_fixture",     "max_output_tokens",  "retry_attempts",
    "retry_backoff_ms"};

bool known(std::string_view key) {
    return std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

long long integer(const std::map<std::string, std::string>& m, const char* key, long long fallback, long long min) {
    auto it = m.find(key);
    if (it == m.end()) return fallback;
    long long v = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < min)
        throw std::invalid_argument(std::string("bad value for ") + key + ": " + s);
    return v;
}

std::string text(const std::map<std::string, std::string>& m, const char* key, std::string fallback = {}) {
    auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view source) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0, pos = 0;
    while (pos < source.size()) {
        const auto nl = source.find('\n', pos);
        const auto line = trim(source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? source.size() : nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        if (!known(key)) throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key " + key);
        out[key] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

ServiceConfig ServiceConfig::load(const std::optional<std::filesystem::path>& file) {
    std::map<std::string, std::string> settings;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw std::invalid_argument("cannot read config " + file->string());
        std::ostringstream ss;
        ss << in.rdbuf();
        settings = parse_config_text(ss.str());
    }
    for (const char* key : kKeys) {
        std::string var = "GRADELOOP_";
        for (const char* c = key; *c; ++c) var += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
        if (const char* v = std::getenv(var.c_str()); v && *v) settings[key] = v;
    }
    return from_settings(settings);
}

ServiceConfig ServiceConfig::from_settings(const std::map<std::string, std::string>& m) {
    ServiceConfig c;
    c.host = text(m, "host", c.host);
    c.port = static_cast<int>(integer(m, "port", c.port, 0));
    c.max_upload_bytes = static_cast<std::size_t>(integer(m, "max_upload_bytes", static_cast<long long>(c.max_upload_bytes), 1));
    c.grading_deadline = std::chrono::seconds(integer(m, "grading_deadline_s", c.grading_deadline.count(), 0));
    c.session_ttl = std::chrono::seconds(integer(m, "session_ttl_s", c.session_ttl.count(), 1));
    c.grading_workers = static_cast<int>(integer(m, "grading_workers", c.grading_workers, 1));
    c.llm_concurrency = static_cast<int>(integer(m, "llm_concurrency", c.llm_concurrency, 1));
    c.solutions = text(m, "solutions");
    c.students = text(m, "students");
    c.identities = text(m, "identities");
    c.usage_log = text(m, "usage_log");
    c.prompts_dir = text(m, "prompts_dir");

    if (auto it = m.find("llm_provider"); it != m.end()) {
        auto kind = llm::parse_provider_kind(it->second);
        if (!kind) throw std::invalid_argument("unknown llm_provider: " + it->second);
        c.provider.kind = *kind;
    }
    c.provider.endpoint = text(m, "llm_endpoint");
    c.provider.api_key = text(m, "llm_api_key");
    c.provider.model = text(m, "llm_model");
    c.provider.mock_fixture = text(m, "mock_fixture");
    c.provider.timeout = std::chrono::milliseconds(integer(m, "llm_timeout_ms", c.provider.timeout.count(), 1));
    c.generation.request_timeout = c.provider.timeout;
    c.generation.max_output_tokens = static_cast<int>(integer(m, "max_output_tokens", c.generation.max_output_tokens, 1));
    c.retry.max_attempts = static_cast<int>(integer(m, "retry_attempts", c.retry.max_attempts, 1));
    c.retry.initial_backoff = std::chrono::milliseconds(integer(m, "retry_backoff_ms", c.retry.initial_backoff.count(), 0));
    return c;
}

}  // namespace gradeloop::service

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "gradeloop/llm_gateway/gateway.hpp"
#include "gradeloop/llm_gateway/providers.hpp"

namespace gradeloop::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_upload_bytes = 5 * 1024 * 1024;
    std::chrono::seconds grading_deadline{120};
    std::chrono::seconds session_ttl{24 * 3600};
    int grading_workers = 2;
    int llm_concurrency = 4;

    std::filesystem::path solutions;   // model solution registry
    std::filesystem::path students;    // registered addresses
    std::filesystem::path identities;  // optional identity sidecar
    std::filesystem::path usage_log;
    std::filesystem::path prompts_dir;  // optional template override

    llm::ProviderSettings provider;
    llm::GenerationConfig generation;
    llm::RetryPolicy retry;

    /// Reads `key = value` lines from `file` (if given), then lets
    /// GRADELOOP_<KEY> environment variables override each key.
    static ServiceConfig load(const std::optional<std::filesystem::path>& file);
    /// Same, from already collected settings (exposed for tests).
    static ServiceConfig from_settings(const std::map<std::string, std::string>& settings);
};

/// Parses the `key = value` format. Unknown keys are rejected.
std::map<std::string, std::string> parse_config_text(std::string_view text);

}  // namespace gradeloop::service

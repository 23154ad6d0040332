#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gradeloop::llm {

/// Smallest nucleus mass we send. A literal top_p of 0 is rejected by some
/// providers, so "as deterministic as possible" is expressed as this value.
inline constexpr double kMinimalNucleusMass = 1e-6;

struct GenerationConfig {
    double temperature = 0.0;
    double nucleus_mass = kMinimalNucleusMass;
    int max_output_tokens = 1024;
    std::chrono::milliseconds request_timeout{60'000};

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

struct LLMResponse {
    std::string text;
    std::chrono::milliseconds latency{0};
    std::string provider_id;
    int attempts = 1;
};

/// Failure of a single provider call. Providers throw this; the gateway
/// decides whether to retry.
class TransportError : public std::runtime_error {
public:
    enum class Kind { Unavailable, Timeout, Quota, Fatal };

    TransportError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

enum class GatewayErrc { ProviderUnavailable, Timeout, QuotaExceeded };

std::string_view to_string(GatewayErrc code);

/// Raised once retries are exhausted (or on a non-retryable failure).
class GatewayError : public std::runtime_error {
public:
    GatewayError(GatewayErrc code, int attempts, const std::string& detail);
    GatewayErrc code() const noexcept { return code_; }
    int attempts() const noexcept { return attempts_; }

private:
    GatewayErrc code_;
    int attempts_;
};

/// A text-completion backend.
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string id() const = 0;
    /// One attempt. Throws TransportError on failure.
    virtual std::string complete(const std::string& prompt, const GenerationConfig& config) = 0;
    /// Cheap reachability check that does not issue a completion.
    virtual bool probe() { return true; }
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Dispatches prompts to a provider with retry/backoff and a cap on
/// in-flight requests. Thread-safe.
class Gateway {
public:
    static constexpr std::ptrdiff_t kMaxConcurrency = 256;

    Gateway(std::shared_ptr<Provider> provider, RetryPolicy retry = {}, int max_concurrency = 4,
            Sleeper sleeper = nullptr);

    LLMResponse complete(const std::string& prompt, const GenerationConfig& config);

    bool probe() const { return provider_->probe(); }
    const std::string& provider_id() const { return provider_id_; }
    const RetryPolicy& retry_policy() const { return retry_; }

private:
    std::shared_ptr<Provider> provider_;
    std::string provider_id_;
    RetryPolicy retry_;
    Sleeper sleeper_;
    std::counting_semaphore<kMaxConcurrency> in_flight_;
};

}  // namespace gradeloop::llm

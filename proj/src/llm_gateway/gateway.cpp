#include "gradeloop/llm_gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace gradeloop::llm {

void GenerationConfig::validate() const {
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
    if (!(nucleus_mass > 0.0 && nucleus_mass <= 1.0)) throw std::invalid_argument("nucleus_mass must be in (0, 1]");
    if (max_output_tokens < 1) throw std::invalid_argument("max_output_tokens must be positive");
    if (request_timeout.count() <= 0) throw std::invalid_argument("request_timeout must be positive");
}

std::string_view to_string(GatewayErrc code) {
    switch (code) {
        case GatewayErrc::ProviderUnavailable: return "ProviderUnavailable";
        case GatewayErrc::Timeout: return "Timeout";
        case GatewayErrc::QuotaExceeded: return "QuotaExceeded";
    }
    return "GatewayError";
}

GatewayError::GatewayError(GatewayErrc code, int attempts, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + " after " + std::to_string(attempts) +
                         " attempt(s): " + detail),
      code_(code),
      attempts_(attempts) {}

namespace {

GatewayErrc classify(TransportError::Kind kind) {
    switch (kind) {
        case TransportError::Kind::Timeout: return GatewayErrc::Timeout;
        case TransportError::Kind::Quota: return GatewayErrc::QuotaExceeded;
        default: return GatewayErrc::ProviderUnavailable;
    }
}

/// Releases a semaphore slot on scope exit.
template <typename Semaphore>
class SlotGuard {
public:
    explicit SlotGuard(Semaphore& s) : s_(s) { s_.acquire(); }
    ~SlotGuard() { s_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    Semaphore& s_;
};

}  // namespace

Gateway::Gateway(std::shared_ptr<Provider> provider, RetryPolicy retry, int max_concurrency, Sleeper sleeper)
    : provider_(std::move(provider)),
      retry_(retry),
      sleeper_(std::move(sleeper)),
      in_flight_(std::clamp<std::ptrdiff_t>(max_concurrency, 1, kMaxConcurrency)) {
    if (!provider_) throw std::invalid_argument("gateway needs a provider");
    if (retry_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    provider_id_ = provider_->id();
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

LLMResponse Gateway::complete(const std::string& prompt, const GenerationConfig& config) {
    if (prompt.empty()) throw std::invalid_argument("prompt must not be empty");
    config.validate();

    TransportError last(TransportError::Kind::Unavailable, "no attempt made");
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        try {
            SlotGuard guard(in_flight_);
            std::string text = provider_->complete(prompt, config);
            LLMResponse response;
            response.text = std::move(text);
            response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            response.provider_id = provider_id_;
            response.attempts = attempt;
            return response;
        } catch (const TransportError& e) {
            if (e.kind() == TransportError::Kind::Fatal)
                throw GatewayError(GatewayErrc::ProviderUnavailable, attempt, e.what());
            last = e;
        }
        if (attempt < retry_.max_attempts) {
            const double factor = std::pow(retry_.multiplier, attempt - 1);
            sleeper_(std::chrono::milliseconds(static_cast<long long>(retry_.initial_backoff.count() * factor)));
        }
    }
    throw GatewayError(classify(last.kind()), retry_.max_attempts, last.what());
}

}  // namespace gradeloop::llm

#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gradeloop/identity_privacy/identity.hpp"
#include "gradeloop/identity_privacy/session_store.hpp"
#include "gradeloop/llm_gateway/gateway.hpp"
#include "gradeloop/prompt_engine/prompt.hpp"
#include "gradeloop/prompt_engine/solution_registry.hpp"
#include "gradeloop/service_api/config.hpp"
#include "gradeloop/usage_log/usage_log.hpp"

namespace httplib {
class Server;
}

namespace gradeloop::service {

inline constexpr std::string_view kOdtMediaType = "application/vnd.oasis.opendocument.text";

struct Reply {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

/// Fixed-size pool running grading jobs.
class WorkerPool {
public:
    explicit WorkerPool(int workers);
    ~WorkerPool();
    void post(std::function<void()> job);

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> jobs_;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

/// The grading service. Each endpoint is available as a plain method (used by
/// tests and the HTTP layer alike).
class Service {
public:
    struct Dependencies {
        std::shared_ptr<const prompt::SolutionRegistry> solutions;
        std::shared_ptr<const privacy::StudentRegistry> students;
        std::shared_ptr<llm::Gateway> gateway;
        std::shared_ptr<usage::UsageLog> usage;
        std::optional<prompt::PromptTemplates> templates;
    };

    Service(ServiceConfig config, Dependencies deps);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Loads registries, log and provider named by the configuration.
    static std::unique_ptr<Service> from_config(const ServiceConfig& config);

    Reply submit(const std::string& email, const std::string& exercise_id, Bytes document);
    Reply status(const std::string& session_id) const;
    Reply feedback(const std::string& session_id);
    Reply purge(const std::string& session_id);
    Reply health() const;

    /// Binds the HTTP listener (port 0 picks a free port) and returns the port.
    int bind();
    /// Serves until stop(). Call bind() first.
    void run();
    void stop();

    privacy::SessionStore& sessions() { return sessions_; }
    const ServiceConfig& config() const { return config_; }

private:
    void grade_job(const std::string& session_id, const std::string& pseudonym, int exercise_id,
                   std::shared_ptr<std::promise<Reply>> done);
    void sweep_loop();

    ServiceConfig config_;
    Dependencies deps_;
    privacy::SessionStore sessions_;
    std::vector<std::string> scrub_list_;
    std::unique_ptr<httplib::Server> server_;
    std::mutex sweep_mu_;
    std::condition_variable sweep_cv_;
    bool stopping_ = false;
    std::thread sweeper_;
    std::unique_ptr<WorkerPool> pool_;
};

}  // namespace gradeloop::service

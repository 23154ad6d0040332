#include "gradeloop/service_api/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <json.hpp>

#include "gradeloop/exercise_format/odt.hpp"
#include "gradeloop/exercise_format/zip_archive.hpp"
#include "gradeloop/grading_orchestrator/orchestrator.hpp"
#include "gradeloop/llm_gateway/providers.hpp"

namespace gradeloop::service {
namespace {

using nlohmann::json;

constexpr const char* kUpload = "upload";
constexpr const char* kMerged = "merged";
constexpr const char* kState = "state";
constexpr const char* kStatus = "status";

Reply json_reply(int status, const json& body) { return Reply{status, "application/json", body.dump(), {}}; }

Reply error_reply(int status, std::string_view code, const std::string& detail, json extra = json::object()) {
    extra["error"] = code;
    if (!detail.empty()) extra["detail"] = detail;
    return json_reply(status, extra);
}

std::string_view odt_code(odt::OdtErrc code) {
    switch (code) {
        case odt::OdtErrc::NotAnOdtContainer: return "NotAnOdtContainer";
        case odt::OdtErrc::MissingContentPart: return "MissingContentPart";
        case odt::OdtErrc::MalformedMarkup: return "MalformedMarkup";
    }
    return "InvalidDocument";
}

std::string short_id(const std::string& id) { return id.substr(0, 8); }

json result_json(const std::string& session_id, const grading::SubmissionResult& r,
                 const exercise::ExercisePaper& paper) {
    json blocks = json::array();
    for (std::size_t i = 0; i < r.answers.size(); ++i) {
        const auto& a = r.answers[i];
        json b{{"answer_id", a.answer_id},
               {"awarded", a.awarded_points.to_string()},
               {"max", paper.blocks[i].max_points.to_string()},
               {"graded", a.graded()}};
        if (a.ungraded_reason) b["reason"] = *a.ungraded_reason;
        blocks.push_back(std::move(b));
    }
    return json{{"session_id", session_id},
                {"status", "ready"},
                {"exercise_id", r.exercise_id},
                {"score",
                 {{"awarded", r.total_awarded.to_string()},
                  {"max", r.total_max.to_string()},
                  {"percent", r.score_percent}}},
                {"blocks", blocks}};
}

}  // namespace

// ---------------------------------------------------------------- pool

WorkerPool::WorkerPool(int workers) {
    for (int i = 0; i < std::max(1, workers); ++i)
        threads_.emplace_back([this] {
            while (true) {
                std::function<void()> job;
                {
                    std::unique_lock lock(mu_);
                    cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
                    if (jobs_.empty()) return;
                    job = std::move(jobs_.front());
                    jobs_.pop_front();
                }
                job();
            }
        });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::post(std::function<void()> job) {
    {
        std::lock_guard lock(mu_);
        jobs_.push_back(std::move(job));
    }
    cv_.notify_one();
}

// ---------------------------------------------------------------- service

Service::Service(ServiceConfig config, Dependencies deps)
    : config_(std::move(config)), deps_(std::move(deps)), sessions_(config_.session_ttl) {
    if (!deps_.solutions || !deps_.students || !deps_.gateway || !deps_.usage)
        throw std::invalid_argument("service dependencies are incomplete");
    // A student may quote a classmate, so every registered identity is scrubbed.
    scrub_list_ = deps_.students->all_identity_strings();
    pool_ = std::make_unique<WorkerPool>(config_.grading_workers);
    sweeper_ = std::thread([this] { sweep_loop(); });
}

Service::~Service() {
    stop();
    {
        std::lock_guard lock(sweep_mu_);
        stopping_ = true;
    }
    sweep_cv_.notify_all();
    if (sweeper_.joinable()) sweeper_.join();
    pool_.reset();
}

std::unique_ptr<Service> Service::from_config(const ServiceConfig& config) {
    if (config.solutions.empty() || config.students.empty() || config.usage_log.empty())
        throw std::invalid_argument("solutions, students and usage_log must be configured");
    Dependencies deps;
    deps.solutions = std::make_shared<prompt::SolutionRegistry>(prompt::SolutionRegistry::load_file(config.solutions));
    deps.students = std::make_shared<privacy::StudentRegistry>(privacy::StudentRegistry::load(
        config.students, config.identities, privacy::StudentRegistry::salt_from_environment()));
    deps.usage = std::make_shared<usage::UsageLog>(config.usage_log);
    deps.gateway = std::make_shared<llm::Gateway>(llm::make_provider(config.provider), config.retry,
                                                  config.llm_concurrency);
    if (!config.prompts_dir.empty()) deps.templates = prompt::PromptTemplates::load_directory(config.prompts_dir);
    return std::make_unique<Service>(config, std::move(deps));
}

void Service::sweep_loop() {
    const auto period = std::min<std::chrono::seconds>(config_.session_ttl, std::chrono::seconds(60));
    std::unique_lock lock(sweep_mu_);
    while (!sweep_cv_.wait_for(lock, period, [this] { return stopping_; })) {
        if (const auto n = sessions_.sweep_expired()) spdlog::info("expired {} session(s)", n);
    }
}

Reply Service::submit(const std::string& email, const std::string& exercise_text, Bytes document) {
    if (email.empty() || exercise_text.empty() || document.empty())
        return error_reply(400, "MissingField", "email, exercise_id and document are required");
    if (document.size() > config_.max_upload_bytes)
        return error_reply(413, "PayloadTooLarge", "limit is " + std::to_string(config_.max_upload_bytes) + " bytes");
    int exercise_id = 0;
    {
        auto [ptr, ec] = std::from_chars(exercise_text.data(), exercise_text.data() + exercise_text.size(), exercise_id);
        if (ec != std::errc{} || ptr != exercise_text.data() + exercise_text.size() || exercise_id < 1)
            return error_reply(400, "InvalidExerciseId", exercise_text);
    }

    privacy::Pseudonym pseudonym;
    try {
        pseudonym = deps_.students->check_registration(email);
    } catch (const privacy::PrivacyError& e) {
        if (e.code() == privacy::PrivacyErrc::InvalidEmailSyntax) return error_reply(400, "InvalidEmailSyntax", "");
        return error_reply(403, "NotRegistered", "");
    }

    // Reject malformed documents before anything is stored or sent.
    try {
        const auto paper = exercise::parse_exercise(document, exercise_id);
        grading::validate_coverage(paper, *deps_.solutions);
    } catch (const exercise::FormatError& e) {
        json extra{{"marker", e.subject()}};
        if (!e.detail().empty()) extra["other"] = e.detail();
        return error_reply(422, exercise::to_string(e.code()), e.what(), extra);
    } catch (const odt::OdtError& e) {
        return error_reply(422, odt_code(e.code()), e.what());
    } catch (const zip::ZipError& e) {
        return error_reply(422, "NotAnOdtContainer", e.what());
    } catch (const grading::GradingError& e) {
        return error_reply(422, grading::to_string(e.code()), e.what(), json{{"marker", e.answer_id()}});
    }

    const std::string id = sessions_.create();
    sessions_.put(id, kUpload, std::move(document));
    sessions_.set_attribute(id, kState, "grading");
    sessions_.set_attribute(id, kStatus, json{{"session_id", id}, {"status", "grading"}}.dump());

    auto done = std::make_shared<std::promise<Reply>>();
    auto future = done->get_future();
    pool_->post([this, id, token = pseudonym.token, exercise_id, done] { grade_job(id, token, exercise_id, done); });

    if (future.wait_for(config_.grading_deadline) == std::future_status::ready) return future.get();
    return json_reply(202, json{{"session_id", id}, {"status", "grading"}});
}

void Service::grade_job(const std::string& id, const std::string& pseudonym, int exercise_id,
                        std::shared_ptr<std::promise<Reply>> done) {
    Reply reply;
    const auto fail = [&](int http, std::string_view code, const std::string& detail) {
        reply = error_reply(http, code, detail, json{{"session_id", id}});
        json status = json::parse(reply.body);
        status["status"] = "failed";
        status["http_status"] = http;
        try {
            sessions_.set_attribute(id, kStatus, status.dump());
            sessions_.set_attribute(id, kState, "failed");
        } catch (const privacy::PrivacyError&) {
        }
    };

    try {
        auto upload = sessions_.take(id, kUpload);
        if (!upload) throw privacy::PrivacyError(privacy::PrivacyErrc::UnknownSession, "");
        grading::GradingOptions options;
        options.generation = config_.generation;
        options.identity_strings = scrub_list_;
        if (deps_.templates) options.templates = &*deps_.templates;

        const auto paper = exercise::parse_exercise(*upload, exercise_id);
        const auto result = grading::grade_submission(*upload, exercise_id, *deps_.solutions, *deps_.gateway, options);
        OPENSSL_cleanse(upload->data(), upload->size());

        if (!result.answers.empty() && result.provider_failures == static_cast<int>(result.answers.size())) {
            fail(502, "ProviderUnavailable", "no answer block could be graded");
            spdlog::warn("session {} exercise {}: provider unavailable", short_id(id), exercise_id);
        } else {
            // Durable before the student sees the result.
            deps_.usage->append(pseudonym, exercise_id, result.score_percent);
            const json status = result_json(id, result, paper);
            sessions_.put(id, kMerged, result.merged_document);
            sessions_.set_attribute(id, kStatus, status.dump());
            sessions_.set_attribute(id, kState, "ready");
            reply = json_reply(200, status);
            spdlog::info("session {} exercise {} graded: {}%", short_id(id), exercise_id, result.score_percent);
        }
    } catch (const privacy::PrivacyError&) {
        reply = error_reply(404, "UnknownSession", "session was purged during grading");
    } catch (const usage::UsageError& e) {
        fail(500, "StorageFailure", e.what());
        spdlog::error("usage log append failed: {}", e.what());
    } catch (const std::exception& e) {
        fail(500, "InternalError", e.what());
        spdlog::error("grading failed for session {}: {}", short_id(id), e.what());
    }
    done->set_value(std::move(reply));
}

Reply Service::status(const std::string& id) const {
    const auto status = sessions_.attribute(id, kStatus);
    if (!status) return error_reply(404, "UnknownSession", "");
    return Reply{200, "application/json", *status, {}};
}

Reply Service::feedback(const std::string& id) {
    const auto state = sessions_.attribute(id, kState);
    if (!state) return error_reply(404, "UnknownSession", "");
    if (*state == "grading") return error_reply(409, "NotReady", "grading is still in progress");
    if (*state == "failed") return error_reply(409, "NotReady", "grading failed; see status");
    auto merged = sessions_.take(id, kMerged);
    if (!merged) return error_reply(404, "UnknownSession", "feedback was already downloaded");
    try {
        sessions_.set_attribute(id, kState, "delivered");
        json status = json::parse(*sessions_.attribute(id, kStatus));
        status["status"] = "delivered";
        sessions_.set_attribute(id, kStatus, status.dump());
    } catch (const privacy::PrivacyError&) {
    }
    Reply r{200, std::string(kOdtMediaType), std::string(merged->begin(), merged->end()), {}};
    OPENSSL_cleanse(merged->data(), merged->size());
    r.headers.emplace_back("Content-Disposition", "attachment; filename=\"feedback.odt\"");
    return r;
}

Reply Service::purge(const std::string& id) {
    try {
        sessions_.purge(id);
    } catch (const privacy::PrivacyError&) {
        return error_reply(404, "UnknownSession", "");
    }
    return json_reply(200, json{{"session_id", id}, {"purged", true}});
}

Reply Service::health() const {
    const bool reachable = deps_.gateway->probe();
    return json_reply(reachable ? 200 : 503,
                      json{{"status", reachable ? "ok" : "degraded"},
                           {"provider", {{"id", deps_.gateway->provider_id()}, {"reachable", reachable}}},
                           {"sessions", sessions_.session_count()}});
}

// ---------------------------------------------------------------- http

namespace {

void send(httplib::Response& res, Reply reply) {
    res.status = reply.status;
    for (auto& [k, v] : reply.headers) res.set_header(k, v);
    res.set_content(std::move(reply.body), reply.content_type);
}

}  // namespace

int Service::bind() {
    server_ = std::make_unique<httplib::Server>();
    auto& s = *server_;
    // Multipart framing adds a little on top of the document itself.
    s.set_payload_max_length(config_.max_upload_bytes + 64 * 1024);

    s.Post("/submissions", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.is_multipart_form_data()) return send(res, error_reply(400, "MissingField", "multipart form expected"));
        const auto field = [&](const char* name) { return req.has_file(name) ? req.get_file_value(name).content : std::string(); };
        const std::string doc = field("document");
        send(res, submit(field("email"), field("exercise_id"), Bytes(doc.begin(), doc.end())));
    });
    s.Get("/submissions/:id/status",
          [this](const httplib::Request& req, httplib::Response& res) { send(res, status(req.path_params.at("id"))); });
    s.Get("/submissions/:id/feedback",
          [this](const httplib::Request& req, httplib::Response& res) { send(res, feedback(req.path_params.at("id"))); });
    s.Delete("/sessions/:id",
             [this](const httplib::Request& req, httplib::Response& res) { send(res, purge(req.path_params.at("id"))); });
    s.Get("/health", [this](const httplib::Request&, httplib::Response& res) { send(res, health()); });

    const int port = config_.port == 0 ? s.bind_to_any_port(config_.host) : (s.bind_to_port(config_.host, config_.port) ? config_.port : -1);
    if (port < 0) throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    return port;
}

void Service::run() {
    if (!server_) throw std::logic_error("bind() before run()");
    server_->listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
}

}  // namespace gradeloop::service

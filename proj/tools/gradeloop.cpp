#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "gradeloop/analytics/errors.hpp"
#include "gradeloop/analytics/report.hpp"
#include "gradeloop/exercise_format/exercise.hpp"
#include "gradeloop/exercise_format/odt.hpp"
#include "gradeloop/exercise_format/zip_archive.hpp"
#include "gradeloop/grading_orchestrator/orchestrator.hpp"
#include "gradeloop/llm_gateway/providers.hpp"
#include "gradeloop/prompt_engine/prompt.hpp"
#include "gradeloop/prompt_engine/solution_registry.hpp"
#include "gradeloop/service_api/service.hpp"
#include "gradeloop/usage_log/usage_log.hpp"

namespace {

using namespace gradeloop;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadInput = 2;

/// Raised for unreadable or missing input files.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw InputError("cannot write " + path.string());
}

std::optional<fs::path> optional_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

int serve(const std::string& config_file) {
    auto config = service::ServiceConfig::load(optional_path(config_file));
    config.provider = llm::ProviderSettings::from_environment(config.provider);

    // Signals are taken by a dedicated thread so stop() runs outside a handler.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto svc = service::Service::from_config(config);
    const int port = svc->bind();
    spdlog::info("listening on {}:{}", config.host, port);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        spdlog::info("signal {}, shutting down", sig);
        svc->stop();
    });
    svc->run();
    if (waiter.joinable()) {
        pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
    }
    return kOk;
}

struct GradeArgs {
    std::string document, solutions, output, config, prompts;
    int exercise = 0;
    std::vector<std::string> identities;
};

int grade(const GradeArgs& a) {
    auto config = service::ServiceConfig::load(optional_path(a.config));
    config.provider = llm::ProviderSettings::from_environment(config.provider);
    const std::string doc = read_file(a.document);
    const auto registry = prompt::SolutionRegistry::parse(read_file(a.solutions));

    llm::Gateway gateway(llm::make_provider(config.provider), config.retry, config.llm_concurrency);
    grading::GradingOptions options;
    options.generation = config.generation;
    options.identity_strings = a.identities;
    std::optional<prompt::PromptTemplates> templates;
    if (!a.prompts.empty()) {
        templates = prompt::PromptTemplates::load_directory(a.prompts);
        options.templates = &*templates;
    }

    const auto result = grading::grade_submission(as_bytes(doc), a.exercise, registry, gateway, options);
    write_file(a.output, std::string_view(reinterpret_cast<const char*>(result.merged_document.data()),
                                          result.merged_document.size()));

    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& ans : result.answers) {
        nlohmann::json b{{"answer_id", ans.answer_id}, {"awarded", ans.awarded_points.to_string()}, {"graded", ans.graded()}};
        if (ans.ungraded_reason) b["reason"] = *ans.ungraded_reason;
        blocks.push_back(std::move(b));
    }
    std::cout << nlohmann::json{{"exercise_id", result.exercise_id},
                                {"awarded", result.total_awarded.to_string()},
                                {"max", result.total_max.to_string()},
                                {"percent", result.score_percent},
                                {"blocks", blocks}}
                     .dump(2)
              << "\n";
    return result.ungraded_count() == 0 ? kOk : kFailed;
}

struct AnalyticsArgs {
    std::string log, study, survey, output;
    bool standardize = false;
};

int run_analytics(const AnalyticsArgs& a) {
    const std::string log = read_file(a.log);
    const std::string study = read_file(a.study);
    std::optional<std::string> survey;
    if (!a.survey.empty()) survey = read_file(a.survey);
    analytics::RegressionOptions options;
    options.standardize_usage = a.standardize;
    const auto run = analytics::run_analytics(log, study, survey ? std::optional<std::string_view>(*survey) : std::nullopt,
                                              options);
    if (a.output.empty() || a.output == "-")
        std::cout << run.report;
    else
        write_file(a.output, run.report);
    return kOk;
}

int validate_registry(const std::string& path, const std::string& prompts) {
    const auto registry = prompt::SolutionRegistry::parse(read_file(path));
    const prompt::PromptTemplates& templates =
        prompts.empty() ? prompt::PromptTemplates::builtin() : prompt::PromptTemplates::load_directory(prompts);
    std::map<int, int> per_exercise;
    for (const auto& [key, e] : registry.entries()) {
        templates.render(prompt::GradingTask{"q", e.model_answer, "", e.max_points, e.policy});
        ++per_exercise[e.exercise_id];
    }
    std::cout << registry.size() << " solution entries\n";
    for (const auto& [ex, n] : per_exercise) std::cout << "exercise " << ex << ": " << n << " block(s)\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradeloop: LLM-assisted grading of exercise sheets"};
    app.require_subcommand(1);

    std::string serve_config;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP grading service");
    serve_cmd->add_option("-c,--config", serve_config, "Configuration file (key = value)")->check(CLI::ExistingFile);

    GradeArgs g;
    auto* grade_cmd = app.add_subcommand("grade", "Grade one document offline");
    grade_cmd->add_option("document", g.document, "Submitted .odt")->required();
    grade_cmd->add_option("-e,--exercise", g.exercise, "Exercise id")->required()->check(CLI::PositiveNumber);
    grade_cmd->add_option("-s,--solutions", g.solutions, "Model solution registry")->required();
    grade_cmd->add_option("-o,--output", g.output, "Where to write the annotated document")->required();
    grade_cmd->add_option("-c,--config", g.config, "Configuration file for provider settings");
    grade_cmd->add_option("--prompts", g.prompts, "Prompt template directory");
    grade_cmd->add_option("--identity", g.identities, "String to redact before prompting (repeatable)");

    AnalyticsArgs an;
    auto* analytics_cmd = app.add_subcommand("run-analytics", "Compute the study report from the usage log");
    analytics_cmd->add_option("--log", an.log, "Usage log")->required();
    analytics_cmd->add_option("--study", an.study, "Study table (pseudonym,SP,BA,WE,EM[,NUC,NUR,group])")->required();
    analytics_cmd->add_option("--survey", an.survey, "Survey responses (respondent,dimension,item,value)");
    analytics_cmd->add_option("-o,--output", an.output, "Report file, '-' for stdout");
    analytics_cmd->add_flag("--standardize", an.standardize, "z-score NUC and NUR before fitting");

    std::string registry_path, registry_prompts;
    auto* registry_cmd = app.add_subcommand("validate-registry", "Check a model solution registry");
    registry_cmd->add_option("registry", registry_path, "Registry file")->required();
    registry_cmd->add_option("--prompts", registry_prompts, "Prompt template directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(serve_config);
        if (*grade_cmd) return grade(g);
        if (*analytics_cmd) return run_analytics(an);
        if (*registry_cmd) return validate_registry(registry_path, registry_prompts);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kFailed;
}

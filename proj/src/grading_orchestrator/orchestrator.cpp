#include "gradeloop/grading_orchestrator/orchestrator.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "gradeloop/identity_privacy/identity.hpp"
#include "gradeloop/llm_gateway/points.hpp"

namespace gradeloop::grading {
namespace {

constexpr std::string_view kProviderError = "provider error";

struct Job {
    const exercise::AnswerBlock* block;
    const prompt::ModelSolutionEntry* entry;
    std::string prompt;
};

HalfPoints nearest_on_grid(double value, HalfPoints max) {
    const double clamped = std::clamp(value, 0.0, max.value());
    return HalfPoints::from_halves(static_cast<std::int64_t>(std::floor(clamped * 2.0 + 0.5)));
}

GradedAnswer ungraded(const std::string& id, std::string reason, int attempts) {
    GradedAnswer g;
    g.answer_id = id;
    g.attempts = attempts;
    g.ungraded_reason = std::move(reason);
    return g;
}

/// One block: complete, read the grade, re-request once on a malformed
/// grade, then fall back to the nearest valid grade.
GradedAnswer grade_one(const Job& job, llm::Gateway& gateway, const llm::GenerationConfig& config) {
    const std::string& id = job.block->answer_id;
    const HalfPoints max = job.block->max_points;
    int attempts = 0;

    llm::LLMResponse first;
    try {
        first = gateway.complete(job.prompt, config);
        attempts += first.attempts;
    } catch (const llm::GatewayError& e) {
        return ungraded(id, std::string(kProviderError) + ": " + std::string(llm::to_string(e.code())), e.attempts());
    }

    GradedAnswer g;
    g.answer_id = id;
    try {
        g.awarded_points = llm::parse_points(first.text, max);
        g.feedback_text = llm::strip_points_statement(first.text);
        g.attempts = attempts;
        return g;
    } catch (const llm::PointsError& e) {
        g.audit_notes.push_back(std::string("re-requested after ") + e.what());
    }

    std::optional<llm::LLMResponse> second;
    try {
        second = gateway.complete(job.prompt, config);
        attempts += second->attempts;
    } catch (const llm::GatewayError& e) {
        attempts += e.attempts();
        g.audit_notes.push_back("re-request failed: " + std::string(llm::to_string(e.code())));
    }

    if (second) {
        try {
            g.awarded_points = llm::parse_points(second->text, max);
            g.feedback_text = llm::strip_points_statement(second->text);
            g.attempts = attempts;
            return g;
        } catch (const llm::PointsError& e) {
            g.audit_notes.push_back(std::string("second response also invalid: ") + e.what());
        }
    }

    // Prefer the newest response that carried a number at all.
    for (const llm::LLMResponse* r : {second ? &*second : nullptr, &first}) {
        if (!r) continue;
        try {
            llm::parse_points(r->text, max);
        } catch (const llm::PointsError& e) {
            if (e.code() == llm::PointsErrc::MissingPointsMarker) continue;
            g.awarded_points = nearest_on_grid(e.value(), max);
            g.feedback_text = llm::strip_points_statement(r->text);
            g.attempts = attempts;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%g", e.value());
            g.audit_notes.push_back(std::string("adjusted ") + buf + " to " + g.awarded_points.to_string());
            return g;
        }
    }
    GradedAnswer out = ungraded(id, "no POINTS statement in response", attempts);
    out.feedback_text = llm::strip_points_statement(second ? second->text : first.text);
    out.audit_notes = std::move(g.audit_notes);
    return out;
}

}  // namespace

std::string_view to_string(GradingErrc code) {
    switch (code) {
        case GradingErrc::MissingSolutionEntry: return "MissingSolutionEntry";
        case GradingErrc::MaxPointsMismatch: return "MaxPointsMismatch";
    }
    return "GradingError";
}

GradingError::GradingError(GradingErrc code, std::string answer_id, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + "(" + answer_id + ")" + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      answer_id_(std::move(answer_id)) {}

int SubmissionResult::ungraded_count() const {
    int n = 0;
    for (const auto& a : answers) n += a.graded() ? 0 : 1;
    return n;
}

void validate_coverage(const exercise::ExercisePaper& paper, const prompt::SolutionRegistry& registry) {
    for (const auto& block : paper.blocks) {
        const auto* entry = registry.find(paper.exercise_id, block.answer_id);
        if (!entry) throw GradingError(GradingErrc::MissingSolutionEntry, block.answer_id);
        if (entry->max_points != block.max_points)
            throw GradingError(GradingErrc::MaxPointsMismatch, block.answer_id,
                               "sheet says " + block.max_points.to_string() + ", registry says " +
                                   entry->max_points.to_string());
    }
}

double score_percent(HalfPoints awarded, HalfPoints max) {
    if (max <= HalfPoints{}) throw std::invalid_argument("total max points must be positive");
    // Single rounding step: both operands are exact integers.
    return static_cast<double>(awarded.halves() * 100) / static_cast<double>(max.halves());
}

std::vector<GradedAnswer> grade_blocks(const exercise::ExercisePaper& paper, const prompt::SolutionRegistry& registry,
                                       llm::Gateway& gateway, const GradingOptions& options) {
    options.generation.validate();
    const prompt::PromptTemplates& templates = options.templates ? *options.templates : prompt::PromptTemplates::builtin();

    // Question and answer text as the model will see it.
    const exercise::ExercisePaper* view = &paper;
    exercise::ExercisePaper scrubbed;
    if (!options.identity_strings.empty()) {
        scrubbed = exercise::extract_blocks(privacy::scrub_submission(paper.source_text, options.identity_strings),
                                            paper.exercise_id);
        view = &scrubbed;
    }

    // Coverage first: nothing is sent unless every block can be graded.
    validate_coverage(*view, registry);
    std::vector<Job> jobs;
    for (const auto& block : view->blocks)
        jobs.push_back(Job{&block, registry.find(paper.exercise_id, block.answer_id), {}});
    for (auto& job : jobs)
        job.prompt = templates.render(prompt::GradingTask{job.block->question_text, job.entry->model_answer,
                                                          job.block->student_answer, job.block->max_points,
                                                          job.entry->policy});

    std::vector<GradedAnswer> graded(jobs.size());
    const int workers = std::clamp<int>(options.parallelism, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) graded[i] = grade_one(jobs[i], gateway, options.generation);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++)
                    graded[i] = grade_one(jobs[i], gateway, options.generation);
            });
        for (auto& t : pool) t.join();
    }
    return graded;
}

SubmissionResult grade_submission(ByteView container, int exercise_id, const prompt::SolutionRegistry& registry,
                                  llm::Gateway& gateway, const GradingOptions& options) {
    const exercise::ExercisePaper paper = exercise::parse_exercise(container, exercise_id);

    SubmissionResult result;
    result.exercise_id = exercise_id;
    result.answers = grade_blocks(paper, registry, gateway, options);
    for (std::size_t i = 0; i < result.answers.size(); ++i) {
        const auto& a = result.answers[i];
        result.total_awarded += a.awarded_points;
        result.total_max += paper.blocks[i].max_points;
        if (!a.graded() && a.ungraded_reason->rfind(kProviderError, 0) == 0) ++result.provider_failures;
    }
    result.score_percent = score_percent(result.total_awarded, result.total_max);
    result.merged_document = exercise::merge_feedback(paper, result.answers, container);
    return result;
}

}  // namespace gradeloop::grading

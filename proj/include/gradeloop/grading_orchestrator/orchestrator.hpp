#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gradeloop/exercise_format/exercise.hpp"
#include "gradeloop/graded_answer.hpp"
#include "gradeloop/llm_gateway/gateway.hpp"
#include "gradeloop/prompt_engine/prompt.hpp"
#include "gradeloop/prompt_engine/solution_registry.hpp"

namespace gradeloop::grading {

enum class GradingErrc { MissingSolutionEntry, MaxPointsMismatch };

std::string_view to_string(GradingErrc code);

/// Raised before any completion is requested.
class GradingError : public std::runtime_error {
public:
    GradingError(GradingErrc code, std::string answer_id, const std::string& detail = {});
    GradingErrc code() const noexcept { return code_; }
    const std::string& answer_id() const noexcept { return answer_id_; }

private:
    GradingErrc code_;
    std::string answer_id_;
};

struct SubmissionResult {
    int exercise_id = 0;
    std::vector<GradedAnswer> answers;
    HalfPoints total_awarded;
    HalfPoints total_max;
    double score_percent = 0.0;
    Bytes merged_document;
    /// Blocks left ungraded because the provider failed.
    int provider_failures = 0;

    int ungraded_count() const;
};

struct GradingOptions {
    llm::GenerationConfig generation;
    /// Blocks graded at once within one submission; 1 grades them in order.
    int parallelism = 1;
    /// Scrubbed from question and answer text before prompts are rendered.
    std::vector<std::string> identity_strings;
    /// Defaults to the built-in templates.
    const prompt::PromptTemplates* templates = nullptr;
};

/// Throws GradingError unless every block has a registry entry with the
/// same maximum points.
void validate_coverage(const exercise::ExercisePaper& paper, const prompt::SolutionRegistry& registry);

/// 100 * awarded / max, computed from exact half-point counts.
double score_percent(HalfPoints awarded, HalfPoints max);

/// Parse, prompt, complete and merge one uploaded document.
SubmissionResult grade_submission(ByteView container, int exercise_id, const prompt::SolutionRegistry& registry,
                                  llm::Gateway& gateway, const GradingOptions& options = {});

/// The grading step alone, for an already parsed paper.
std::vector<GradedAnswer> grade_blocks(const exercise::ExercisePaper& paper, const prompt::SolutionRegistry& registry,
                                       llm::Gateway& gateway, const GradingOptions& options = {});

}  // namespace gradeloop::grading

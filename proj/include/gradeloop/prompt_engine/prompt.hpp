#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "gradeloop/half_points.hpp"

namespace gradeloop::prompt {

enum class MatchMode { CloseMatch, PartialMatch, FlexibleMatch };

std::string_view to_string(MatchMode mode);

/// How strictly a student answer has to match the model solution.
/// PartialMatch carries the minimum number of answer elements to cover.
class MatchPolicy {
public:
    static MatchPolicy close_match() { return MatchPolicy(MatchMode::CloseMatch, std::nullopt); }
    static MatchPolicy flexible_match() { return MatchPolicy(MatchMode::FlexibleMatch, std::nullopt); }
    /// Throws std::invalid_argument when min_elements < 1.
    static MatchPolicy partial_match(int min_elements);

    MatchMode mode() const { return mode_; }
    std::optional<int> min_elements() const { return min_elements_; }

    bool operator==(const MatchPolicy&) const = default;

private:
    MatchPolicy(MatchMode mode, std::optional<int> n) : mode_(mode), min_elements_(n) {}
    MatchMode mode_;
    std::optional<int> min_elements_;
};

struct GradingTask {
    std::string question_text;
    std::string model_answer;
    std::string student_answer;
    HalfPoints max_points;
    MatchPolicy policy = MatchPolicy::close_match();
};

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The section tags every prompt carries, in order.
inline constexpr std::array<std::string_view, 7> kSections{
    "<Role>", "<Context>", "<Action>", "<Output>", "<Question>", "<Model Answer>", "<Student Solution>"};

/// One prompt template per match mode, with {{question}}, {{model_answer}},
/// {{student_answer}}, {{max_points}} and {{n}} placeholders. Templates are
/// validated on construction: all seven sections in order, only known
/// placeholders, {{n}} only in the PartialMatch template.
class PromptTemplates {
public:
    PromptTemplates(std::string close_match, std::string partial_match, std::string flexible_match);

    /// The English templates shipped in assets/prompts/en.
    static const PromptTemplates& builtin();

    /// Reads close_match.txt, partial_match.txt and flexible_match.txt.
    static PromptTemplates load_directory(const std::filesystem::path& dir);

    const std::string& for_mode(MatchMode mode) const;

    /// Placeholder values are inserted verbatim and never re-expanded, so a
    /// student answer containing "{{model_answer}}" stays literal.
    std::string render(const GradingTask& task) const;

private:
    std::string close_;
    std::string partial_;
    std::string flexible_;
};

/// Renders with the built-in templates.
std::string render_prompt(const GradingTask& task);

}  // namespace gradeloop::prompt

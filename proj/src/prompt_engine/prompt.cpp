#include "gradeloop/prompt_engine/prompt.hpp"

#include <fstream>
#include <sstream>

#include "builtin_prompts.hpp"

namespace gradeloop::prompt {
namespace {

constexpr std::array<std::string_view, 5> kPlaceholders{"question", "model_answer", "student_answer", "max_points",
                                                         "n"};

bool is_known_placeholder(std::string_view name) {
    for (auto p : kPlaceholders)
        if (p == name) return true;
    return false;
}

/// Visits template text, calling `literal` for plain runs and `slot` for each
/// placeholder name.
template <typename Literal, typename Slot>
void walk(std::string_view tmpl, Literal&& literal, Slot&& slot) {
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            literal(tmpl.substr(pos));
            return;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw TemplateError("unterminated placeholder");
        literal(tmpl.substr(pos, open - pos));
        slot(tmpl.substr(open + 2, close - open - 2));
        pos = close + 2;
    }
}

void validate(std::string_view name, std::string_view tmpl, bool allows_n) {
    std::size_t cursor = 0;
    for (std::string_view tag : kSections) {
        const auto at = tmpl.find(tag, cursor);
        if (at == std::string_view::npos)
            throw TemplateError(std::string(name) + ": missing or misplaced section " + std::string(tag));
        if (tmpl.find(tag) != at || tmpl.find(tag, at + tag.size()) != std::string_view::npos)
            throw TemplateError(std::string(name) + ": section " + std::string(tag) + " appears twice");
        cursor = at + tag.size();
    }
    walk(
        tmpl, [](std::string_view) {},
        [&](std::string_view slot) {
            if (!is_known_placeholder(slot))
                throw TemplateError(std::string(name) + ": unknown placeholder {{" + std::string(slot) + "}}");
            if (slot == "n" && !allows_n)
                throw TemplateError(std::string(name) + ": {{n}} is only meaningful for partial match");
        });
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError("cannot read template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string_view to_string(MatchMode mode) {
    switch (mode) {
        case MatchMode::CloseMatch: return "close";
        case MatchMode::PartialMatch: return "partial";
        case MatchMode::FlexibleMatch: return "flexible";
    }
    return "unknown";
}

MatchPolicy MatchPolicy::partial_match(int min_elements) {
    if (min_elements < 1) throw std::invalid_argument("partial match needs n >= 1");
    return MatchPolicy(MatchMode::PartialMatch, min_elements);
}

PromptTemplates::PromptTemplates(std::string close_match, std::string partial_match, std::string flexible_match)
    : close_(std::move(close_match)), partial_(std::move(partial_match)), flexible_(std::move(flexible_match)) {
    validate("close_match", close_, false);
    validate("partial_match", partial_, true);
    validate("flexible_match", flexible_, false);
}

const PromptTemplates& PromptTemplates::builtin() {
    static const PromptTemplates templates(std::string(builtin::kCloseMatch), std::string(builtin::kPartialMatch),
                                           std::string(builtin::kFlexibleMatch));
    return templates;
}

PromptTemplates PromptTemplates::load_directory(const std::filesystem::path& dir) {
    return PromptTemplates(read_text(dir / "close_match.txt"), read_text(dir / "partial_match.txt"),
                           read_text(dir / "flexible_match.txt"));
}

const std::string& PromptTemplates::for_mode(MatchMode mode) const {
    switch (mode) {
        case MatchMode::PartialMatch: return partial_;
        case MatchMode::FlexibleMatch: return flexible_;
        case MatchMode::CloseMatch: break;
    }
    return close_;
}

std::string PromptTemplates::render(const GradingTask& task) const {
    const std::string max_points = task.max_points.to_string();
    const std::string n = task.policy.min_elements() ? std::to_string(*task.policy.min_elements()) : std::string();
    std::string out;
    walk(
        for_mode(task.policy.mode()), [&](std::string_view text) { out.append(text); },
        [&](std::string_view slot) {
            if (slot == "question") out += task.question_text;
            else if (slot == "model_answer") out += task.model_answer;
            else if (slot == "student_answer") out += task.student_answer;
            else if (slot == "max_points") out += max_points;
            else if (slot == "n") out += n;
        });
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ' || out.back() == '\r')) out.pop_back();
    return out;
}

std::string render_prompt(const GradingTask& task) { return PromptTemplates::builtin().render(task); }

}  // namespace gradeloop::prompt

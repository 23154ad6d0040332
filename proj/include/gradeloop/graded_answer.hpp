#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gradeloop/half_points.hpp"

namespace gradeloop {

/// Outcome of grading one answer block.
struct GradedAnswer {
    std::string answer_id;
    HalfPoints awarded_points;
    /// Model response with the trailing POINTS: statement removed.
    std::string feedback_text;
    int attempts = 0;
    /// Set when the block could not be graded; awarded_points is then 0.
    std::optional<std::string> ungraded_reason;
    /// Fallback actions taken (re-request, clamping) in the order they happened.
    std::vector<std::string> audit_notes;

    bool graded() const { return !ungraded_reason.has_value(); }
};

}  // namespace gradeloop

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "gradeloop/half_points.hpp"

namespace gradeloop::llm {

inline constexpr std::string_view kPointsMarker = "POINTS:";

enum class PointsErrc { MissingPointsMarker, PointsOffGrid, PointsOutOfRange };

std::string_view to_string(PointsErrc code);

class PointsError : public std::runtime_error {
public:
    PointsError(PointsErrc code, double value, HalfPoints max_points);
    PointsErrc code() const noexcept { return code_; }
    /// The number the model emitted (NaN for MissingPointsMarker).
    double value() const noexcept { return value_; }
    HalfPoints max_points() const noexcept { return max_; }

private:
    PointsErrc code_;
    double value_;
    HalfPoints max_;
};

/// Reads the grade after the last "POINTS:" in a completion. Markdown
/// emphasis around the number is tolerated. Throws std::invalid_argument
/// when max_points is not positive.
HalfPoints parse_points(std::string_view response, HalfPoints max_points);

/// The completion with its terminal POINTS statement cut off.
std::string strip_points_statement(std::string_view response);

}  // namespace gradeloop::llm

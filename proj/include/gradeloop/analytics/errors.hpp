#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gradeloop::analytics {

enum class AnalyticsErrc { Ineligible, EmptyDimension, InsufficientRows, SingularDesign, DegenerateGroups, InvalidInput };

std::string_view to_string(AnalyticsErrc code);

class AnalyticsError : public std::runtime_error {
public:
    AnalyticsError(AnalyticsErrc code, const std::string& detail);
    AnalyticsErrc code() const noexcept { return code_; }

private:
    AnalyticsErrc code_;
};

}  // namespace gradeloop::analytics

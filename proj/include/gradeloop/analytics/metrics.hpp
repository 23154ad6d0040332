#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gradeloop/analytics/errors.hpp"
#include "gradeloop/usage_log/usage_log.hpp"

namespace gradeloop::analytics {

/// (final - initial) / (100 - initial), both in percent. Throws Ineligible
/// when initial is 100.
double relative_learning_gain(double initial, double final_score);

struct EngagementSummary {
    std::string pseudonym;
    std::set<int> single_submission;  // exercises submitted exactly once
    std::set<int> repeated;           // exercises submitted more than once
    /// Mean first score over single-submission exercises, in percent.
    std::optional<double> nuc;
    /// Mean learning gain over repeated exercises that started below 100.
    std::optional<double> nur;
    int excluded = 0;
    std::vector<std::string> audit;
};

std::vector<EngagementSummary> engagement_summaries(const usage::Grouped& grouped);

struct LikertDimension {
    std::string name;
    std::size_t responses = 0;
    double mean = 0.0;
    int mapped_point = 0;
};

/// Mean over every item answer of every respondent, mapped to the nearest
/// scale point with halves rounded up.
LikertDimension likert_summary(const std::string& name, const std::vector<std::vector<int>>& respondents);

/// "strongly disagree" .. "strongly agree" for points 1..5.
std::string_view likert_label(int point);

}  // namespace gradeloop::analytics

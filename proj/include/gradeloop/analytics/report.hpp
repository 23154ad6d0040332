#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gradeloop/analytics/kruskal_wallis.hpp"
#include "gradeloop/analytics/metrics.hpp"
#include "gradeloop/analytics/regression.hpp"

namespace gradeloop::analytics {

/// Study file: comma-separated with a header naming at least pseudonym, SP,
/// BA, WE and EM; NUC, NUR and group are optional. Empty fields are missing.
std::vector<StudyRow> parse_study(std::string_view text);

/// Survey file: header "respondent,dimension,item,value".
/// Returns dimension -> respondent -> answers.
std::map<std::string, std::vector<std::vector<int>>> parse_survey(std::string_view text);

/// Fills NUC/NUR that the study file leaves empty from usage summaries.
/// NUC enters as a fraction of 100 (percent / 100), NUR as-is.
void attach_engagement(std::vector<StudyRow>& rows, const std::vector<EngagementSummary>& summaries);

struct ReportInput {
    std::vector<EngagementSummary> engagement;
    std::optional<RegressionFit> fit;
    /// Why the regression is absent, when it is.
    std::string fit_note;
    std::optional<KruskalWallisResult> kruskal_wallis;
    std::vector<std::string> kw_groups;
    std::vector<LikertDimension> likert;
};

/// Plain-text report; every table is comma-separated under a "# " heading.
std::string emit_report(const ReportInput& input);

struct AnalyticsRun {
    ReportInput input;
    std::string report;
};

/// Full batch: usage log + study file (+ optional survey) to report.
AnalyticsRun run_analytics(std::string_view usage_log, std::string_view study,
                           std::optional<std::string_view> survey = std::nullopt,
                           const RegressionOptions& options = {});

}  // namespace gradeloop::analytics

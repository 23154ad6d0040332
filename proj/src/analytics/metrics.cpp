#include "gradeloop/analytics/metrics.hpp"

#include <cmath>

namespace gradeloop::analytics {

std::string_view to_string(AnalyticsErrc code) {
    switch (code) {
        case AnalyticsErrc::Ineligible: return "Ineligible";
        case AnalyticsErrc::EmptyDimension: return "EmptyDimension";
        case AnalyticsErrc::InsufficientRows: return "InsufficientRows";
        case AnalyticsErrc::SingularDesign: return "SingularDesign";
        case AnalyticsErrc::DegenerateGroups: return "DegenerateGroups";
        case AnalyticsErrc::InvalidInput: return "InvalidInput";
    }
    return "AnalyticsError";
}

AnalyticsError::AnalyticsError(AnalyticsErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)), code_(code) {}

double relative_learning_gain(double initial, double final_score) {
    const auto in_range = [](double v) { return v >= 0.0 && v <= 100.0; };
    if (!in_range(initial) || !in_range(final_score))
        throw AnalyticsError(AnalyticsErrc::InvalidInput, "scores must be percentages");
    if (initial == 100.0) throw AnalyticsError(AnalyticsErrc::Ineligible, "initial score is 100");
    return (final_score - initial) / (100.0 - initial);
}

std::vector<EngagementSummary> engagement_summaries(const usage::Grouped& grouped) {
    std::vector<EngagementSummary> out;
    for (const auto& [pseudonym, exercises] : grouped) {
        EngagementSummary s;
        s.pseudonym = pseudonym;
        double nuc_sum = 0.0, nur_sum = 0.0;
        int nur_count = 0;
        for (const auto& [exercise, scores] : exercises) {
            if (scores.empty()) continue;
            if (scores.size() == 1) {
                s.single_submission.insert(exercise);
                nuc_sum += scores.front();
                continue;
            }
            s.repeated.insert(exercise);
            try {
                nur_sum += relative_learning_gain(scores.front(), scores.back());
                ++nur_count;
            } catch (const AnalyticsError& e) {
                if (e.code() != AnalyticsErrc::Ineligible) throw;
                ++s.excluded;
                s.audit.push_back("exercise " + std::to_string(exercise) + " excluded from NUR: initial score 100");
            }
        }
        if (!s.single_submission.empty()) s.nuc = nuc_sum / static_cast<double>(s.single_submission.size());
        if (nur_count > 0) s.nur = nur_sum / nur_count;
        out.push_back(std::move(s));
    }
    return out;
}

LikertDimension likert_summary(const std::string& name, const std::vector<std::vector<int>>& respondents) {
    long long sum = 0, n = 0;
    for (const auto& items : respondents)
        for (int v : items) {
            if (v < 1 || v > 5) throw AnalyticsError(AnalyticsErrc::InvalidInput, "Likert answer out of 1..5");
            sum += v;
            ++n;
        }
    if (n == 0) throw AnalyticsError(AnalyticsErrc::EmptyDimension, name);
    LikertDimension d;
    d.name = name;
    d.responses = static_cast<std::size_t>(n);
    d.mean = static_cast<double>(sum) / static_cast<double>(n);
    // floor(sum/n + 1/2) in integers, so ties round up without float error.
    d.mapped_point = static_cast<int>((2 * sum + n) / (2 * n));
    return d;
}

std::string_view likert_label(int point) {
    switch (point) {
        case 1: return "strongly disagree";
        case 2: return "disagree";
        case 3: return "neutral";
        case 4: return "agree";
        case 5: return "strongly agree";
    }
    return "?";
}

}  // namespace gradeloop::analytics

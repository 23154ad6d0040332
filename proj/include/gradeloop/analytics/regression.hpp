#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gradeloop/analytics/errors.hpp"

namespace gradeloop::analytics {

struct Coefficient {
    std::string term;
    double estimate = 0.0;
    double std_error = 0.0;
    double t_value = 0.0;
    double p_value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct RegressionFit {
    std::vector<Coefficient> coefficients;
    std::size_t n_used = 0;
    int df = 0;
    double residual_variance = 0.0;
    double r_squared = 0.0;
    Eigen::VectorXd residuals;
};

/// Ordinary least squares with t-based inference. X must already contain
/// an intercept column if one is wanted. Needs at least columns + 2 rows.
RegressionFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& terms,
                         double confidence = 0.95);

/// estimate +- t_crit(df, (1 + confidence) / 2) * std_error
std::pair<double, double> confidence_interval(double estimate, double std_error, int df, double confidence = 0.95);

struct StudyRow {
    std::string pseudonym;
    std::optional<double> sp, ba, we, em, nuc, nur;
    std::optional<std::string> group;
};

inline constexpr std::array<std::string_view, 6> kRegressionTerms{"Intercept", "BA", "WE", "EM", "NUC", "NUR"};

struct RegressionOptions {
    /// z-score NUC and NUR over the complete cases before fitting.
    bool standardize_usage = false;
};

/// SP ~ 1 + BA + WE + EM + NUC + NUR over complete cases.
RegressionFit fit_ols(const std::vector<StudyRow>& rows, const RegressionOptions& options = {});

}  // namespace gradeloop::analytics

#include "gradeloop/analytics/regression.hpp"

#include <cmath>

#include "gradeloop/analytics/distributions.hpp"

namespace gradeloop::analytics {

std::pair<double, double> confidence_interval(double estimate, double std_error, int df, double confidence) {
    const double t = student_t_quantile((1.0 + confidence) / 2.0, df);
    return {estimate - t * std_error, estimate + t * std_error};
}

RegressionFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& terms,
                         double confidence) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (y.size() != n || static_cast<Eigen::Index>(terms.size()) != p)
        throw AnalyticsError(AnalyticsErrc::InvalidInput, "design, response and term names disagree in size");
    if (n < p + 2)
        throw AnalyticsError(AnalyticsErrc::InsufficientRows,
                             std::to_string(n) + " usable rows, need " + std::to_string(p + 2));
    if (!X.allFinite() || !y.allFinite()) throw AnalyticsError(AnalyticsErrc::InvalidInput, "non-finite value");

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p)
        throw AnalyticsError(AnalyticsErrc::SingularDesign, "rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));

    RegressionFit fit;
    const Eigen::VectorXd beta = qr.solve(y);
    fit.residuals = y - X * beta;
    fit.n_used = static_cast<std::size_t>(n);
    fit.df = static_cast<int>(n - p);
    const double rss = fit.residuals.squaredNorm();
    fit.residual_variance = rss / fit.df;
    const double tss = (y.array() - y.mean()).matrix().squaredNorm();
    fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;

    // (X'X)^-1 = P R^-1 R^-T P' from X P = Q R.
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
    const Eigen::MatrixXd xtx_inv = qr.colsPermutation() * xtx_inv_perm * qr.colsPermutation().transpose();

    const double t_crit = student_t_quantile((1.0 + confidence) / 2.0, fit.df);
    for (Eigen::Index j = 0; j < p; ++j) {
        Coefficient c;
        c.term = terms[static_cast<std::size_t>(j)];
        c.estimate = beta(j);
        c.std_error = std::sqrt(fit.residual_variance * xtx_inv(j, j));
        c.t_value = c.estimate / c.std_error;
        c.p_value = student_t_two_sided_p(c.t_value, fit.df);
        c.ci_low = c.estimate - t_crit * c.std_error;
        c.ci_high = c.estimate + t_crit * c.std_error;
        fit.coefficients.push_back(std::move(c));
    }
    return fit;
}

RegressionFit fit_ols(const std::vector<StudyRow>& rows, const RegressionOptions& options) {
    std::vector<const StudyRow*> complete;
    for (const auto& r : rows)
        if (r.sp && r.ba && r.we && r.em && r.nuc && r.nur) complete.push_back(&r);

    const auto n = static_cast<Eigen::Index>(complete.size());
    Eigen::MatrixXd X(n, 6);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const StudyRow& r = *complete[static_cast<std::size_t>(i)];
        X.row(i) << 1.0, *r.ba, *r.we, *r.em, *r.nuc, *r.nur;
        y(i) = *r.sp;
    }
    if (options.standardize_usage && n > 1) {
        for (int col : {4, 5}) {
            const double mean = X.col(col).mean();
            const double sd = std::sqrt((X.col(col).array() - mean).square().sum() / static_cast<double>(n - 1));
            if (sd > 0.0) X.col(col) = (X.col(col).array() - mean) / sd;
        }
    }
    return fit_linear(X, y, std::vector<std::string>(kRegressionTerms.begin(), kRegressionTerms.end()));
}

}  // namespace gradeloop::analytics

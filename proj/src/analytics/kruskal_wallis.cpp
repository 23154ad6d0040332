#include "gradeloop/analytics/kruskal_wallis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradeloop/analytics/distributions.hpp"

namespace gradeloop::analytics {
namespace {

/// Midranks (1-based) of the pooled sample and the tie correction factor.
std::pair<std::vector<double>, double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(n);
    double tie_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        const double t = static_cast<double>(j - i + 1);
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    const double nn = static_cast<double>(n);
    return {ranks, 1.0 - tie_sum / (nn * nn * nn - nn)};
}

/// Sum over groups of R_j^2 / n_j; H is an increasing affine function of it.
double rank_statistic(const std::vector<double>& rank_sums, const std::vector<std::size_t>& sizes) {
    double s = 0.0;
    for (std::size_t j = 0; j < sizes.size(); ++j) s += rank_sums[j] * rank_sums[j] / static_cast<double>(sizes[j]);
    return s;
}

double assignment_count(const std::vector<std::size_t>& sizes) {
    double log_count = std::lgamma(static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0})) + 1);
    for (auto s : sizes) log_count -= std::lgamma(static_cast<double>(s) + 1);
    return std::exp(log_count);
}

/// Enumerates every assignment of ranks to groups of the given sizes and
/// counts those whose statistic reaches `observed`.
class Enumerator {
public:
    Enumerator(const std::vector<double>& ranks, const std::vector<std::size_t>& sizes, double observed)
        : ranks_(ranks), capacity_(sizes), sizes_(sizes), sums_(sizes.size(), 0.0), observed_(observed) {}

    void run(std::size_t i = 0) {
        if (i == ranks_.size()) {
            ++total_;
            if (rank_statistic(sums_, sizes_) >= observed_) ++extreme_;
            return;
        }
        for (std::size_t g = 0; g < capacity_.size(); ++g) {
            if (capacity_[g] == 0) continue;
            --capacity_[g];
            sums_[g] += ranks_[i];
            run(i + 1);
            sums_[g] -= ranks_[i];
            ++capacity_[g];
        }
    }

    double p() const { return static_cast<double>(extreme_) / static_cast<double>(total_); }

private:
    const std::vector<double>& ranks_;
    std::vector<std::size_t> capacity_;
    const std::vector<std::size_t>& sizes_;
    std::vector<double> sums_;
    double observed_;
    unsigned long long total_ = 0, extreme_ = 0;
};

}  // namespace

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw AnalyticsError(AnalyticsErrc::DegenerateGroups, "need at least two groups");
    std::vector<double> pooled;
    std::vector<std::size_t> sizes;
    for (const auto& g : groups) {
        if (g.empty()) throw AnalyticsError(AnalyticsErrc::DegenerateGroups, "empty group");
        for (double v : g)
            if (!std::isfinite(v)) throw AnalyticsError(AnalyticsErrc::InvalidInput, "non-finite observation");
        pooled.insert(pooled.end(), g.begin(), g.end());
        sizes.push_back(g.size());
    }
    if (pooled.size() < 5) throw AnalyticsError(AnalyticsErrc::DegenerateGroups, "need at least five observations");

    const auto [ranks, correction] = midranks(pooled);
    if (correction <= 0.0) throw AnalyticsError(AnalyticsErrc::DegenerateGroups, "all observations are tied");

    std::vector<double> sums(sizes.size(), 0.0);
    for (std::size_t g = 0, i = 0; g < sizes.size(); ++g)
        for (std::size_t k = 0; k < sizes[g]; ++k) sums[g] += ranks[i++];

    const double n = static_cast<double>(pooled.size());
    const double stat = rank_statistic(sums, sizes);
    KruskalWallisResult r;
    r.n = pooled.size();
    r.df = static_cast<int>(groups.size()) - 1;
    r.h = std::max(0.0, (12.0 / (n * (n + 1.0)) * stat - 3.0 * (n + 1.0)) / correction);
    r.p_chi_square = chi_square_sf(r.h, r.df);
    r.p_value = r.p_chi_square;

    if (assignment_count(sizes) <= kExactAssignmentLimit) {
        // Relative slack so assignments tying the observed statistic count as extreme.
        Enumerator e(ranks, sizes, stat * (1.0 - 1e-12));
        e.run();
        r.p_value = e.p();
        r.exact = true;
    }
    return r;
}

}  // namespace gradeloop::analytics

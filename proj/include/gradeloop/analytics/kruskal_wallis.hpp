#pragma once

#include <vector>

#include "gradeloop/analytics/errors.hpp"

namespace gradeloop::analytics {

struct KruskalWallisResult {
    double h = 0.0;
    int df = 0;
    /// Exact permutation p when `exact`, otherwise the chi-square approximation.
    double p_value = 1.0;
    double p_chi_square = 1.0;
    bool exact = false;
    std::size_t n = 0;
};

/// Group assignments up to which the permutation distribution is enumerated.
inline constexpr double kExactAssignmentLimit = 4e6;

/// H with tie correction. Throws DegenerateGroups for fewer than two
/// groups, an empty group, fewer than five observations, or all values tied.
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

}  // namespace gradeloop::analytics

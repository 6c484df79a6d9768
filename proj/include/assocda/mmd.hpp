#pragma once

#include <optional>
#include <vector>

#include "assocda/matrix.hpp"

namespace assocda {

enum class MmdEstimator { biased, unbiased };

struct MmdConfig {
    // Final bandwidths are base * multipliers where base comes from the
    // median heuristic unless a fixed bandwidth is given.
    std::vector<double> bandwidth_multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};
    bool use_median_heuristic = true;
    std::optional<double> fixed_bandwidth;
    MmdEstimator estimator = MmdEstimator::biased;

    void validate() const;
    std::vector<double> resolve_bandwidths(const Matrix& x, const Matrix& y) const;
};

struct MmdResult {
    double mmd_squared = 0.0;
    std::vector<double> bandwidths_used;
    std::optional<Matrix> grad_source;
    std::optional<Matrix> grad_target;
};

// K(i,j) = exp(-||x_i - y_j||^2 / (2 sigma^2)).
Matrix rbf_kernel_matrix(const Matrix& x, const Matrix& y, double sigma);

// Median of all pairwise Euclidean distances over the pooled rows of x and
// y; 1.0 when every point coincides.
double median_heuristic(const Matrix& x, const Matrix& y);

// Quadratic-time MMD^2 averaged over the kernel mixture. Bandwidths are
// treated as constants in the backward pass, so gradient checks must pin
// them via fixed_bandwidth.
MmdResult mmd2(const Matrix& x, const Matrix& y, const MmdConfig& cfg, bool with_grad);

}  // namespace assocda

#pragma once

#include <vector>

#include "assocda/matrix.hpp"

// Plain single-threaded reference kernels. They share no code with the
// OpenMP implementations and are kept as oracles for the test suite and as
// the baseline side of the kernel benchmark.
namespace assocda::serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix row_softmax(const Matrix& m);
double cross_entropy_rows(const Matrix& target, const Matrix& probs, double clamp);

// K(i,j) = exp(-||x_i - y_j||^2 / (2 sigma^2)), computed pair by pair.
Matrix rbf_kernel_matrix(const Matrix& x, const Matrix& y, double sigma);

// Biased MMD^2 via the direct double loop over sample pairs, averaged over
// the bandwidth list with equal weights.
double mmd2_biased(const Matrix& x, const Matrix& y, const std::vector<double>& sigmas);
double mmd2_unbiased(const Matrix& x, const Matrix& y, const std::vector<double>& sigmas);

}  // namespace assocda::serial

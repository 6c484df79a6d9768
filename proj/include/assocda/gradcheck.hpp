#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "assocda/matrix.hpp"

namespace assocda {

// Central finite differences, h = 1e-5. Entries where both sides are
// below 1e-6 in magnitude count as matching.
double fd_rel_err(double analytic, double fd);

// Worst relative error between an analytic gradient and central
// differences of `f` taken through the entries of `x`, together with the
// flat entry index where it occurs. x is restored afterwards.
std::pair<double, size_t> max_grad_rel_err_at(Matrix& x, const Matrix& analytic,
                                              const std::function<double()>& f, double h = 1e-5);
double max_grad_rel_err(Matrix& x, const Matrix& analytic, const std::function<double()>& f,
                        double h = 1e-5);

struct GradcheckEntry {
    std::string component;
    double max_rel_err;
    std::string worst_location;  // "instance 3, grad_source[12]"
};

struct GradcheckReport {
    std::vector<GradcheckEntry> entries;
    bool all_below(double tol) const;
};

// Finite-difference suites over random instances (n_s, n_t <= 8, d <= 5)
// for the walker, visit, MMD, classification and composite objectives.
// flip_walker_grad negates the analytic walker gradient; it exists so the
// sign-sensitivity of the checker itself can be exercised.
GradcheckReport run_gradcheck(uint64_t seed, int instances, bool flip_walker_grad = false);

}  // namespace assocda

#include "assocda/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace assocda {

void MmdConfig::validate() const {
    if (bandwidth_multipliers.empty())
        throw std::invalid_argument("MmdConfig: need at least one bandwidth multiplier");
    for (double m : bandwidth_multipliers)
        if (!(m > 0.0)) throw std::invalid_argument("MmdConfig: multipliers must be positive");
    if (fixed_bandwidth && !(*fixed_bandwidth > 0.0))
        throw std::invalid_argument("MmdConfig: fixed bandwidth must be positive");
    if (!use_median_heuristic && !fixed_bandwidth)
        throw std::invalid_argument("MmdConfig: no bandwidth source (median heuristic off, no fixed)");
}

std::vector<double> MmdConfig::resolve_bandwidths(const Matrix& x, const Matrix& y) const {
    validate();
    const double base = fixed_bandwidth ? *fixed_bandwidth : median_heuristic(x, y);
    std::vector<double> out;
    out.reserve(bandwidth_multipliers.size());
    for (double m : bandwidth_multipliers) out.push_back(base * m);
    return out;
}

namespace {

constexpr long kParallelCutoff = 8 * 1024;

double sqdist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
    }
    return s;
}

Matrix pairwise_sqdist(const Matrix& x, const Matrix& y) {
    Matrix d(x.rows, y.rows);
#pragma omp parallel for schedule(static) \
    if (static_cast<long>(x.rows) * y.rows * x.cols > kParallelCutoff)
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < y.rows; ++j)
            d(i, j) = sqdist(&x.data[static_cast<size_t>(i) * x.cols],
                             &y.data[static_cast<size_t>(j) * y.cols], x.cols);
    return d;
}

// Mean of exp(-D/(2 sigma^2)); row partials first so the sum order does not
// depend on the thread count. drop_diagonal selects the unbiased form.
double kernel_mean(const Matrix& d, double sigma, bool drop_diagonal) {
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> row_sum(d.rows, 0.0);
#pragma omp parallel for schedule(static) \
    if (static_cast<long>(d.rows) * d.cols > kParallelCutoff)
    for (int i = 0; i < d.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < d.cols; ++j) {
            if (drop_diagonal && i == j) continue;
            s += std::exp(-d(i, j) * inv2s2);
        }
        row_sum[i] = s;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    const double count = drop_diagonal ? static_cast<double>(d.rows) * (d.cols - 1)
                                       : static_cast<double>(d.rows) * d.cols;
    return total / count;
}

}  // namespace

Matrix rbf_kernel_matrix(const Matrix& x, const Matrix& y, double sigma) {
    if (x.cols != y.cols)
        throw std::invalid_argument("rbf_kernel_matrix: dims differ: " + x.shape_str() + " vs " +
                                    y.shape_str());
    if (!(sigma > 0.0)) throw std::invalid_argument("rbf_kernel_matrix: sigma must be positive");
    Matrix k = pairwise_sqdist(x, y);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (double& v : k.data) v = std::exp(-v * inv2s2);
    return k;
}

double median_heuristic(const Matrix& x, const Matrix& y) {
    if (x.cols != y.cols)
        throw std::invalid_argument("median_heuristic: dims differ: " + x.shape_str() + " vs " +
                                    y.shape_str());
    const int total = x.rows + y.rows;
    if (total < 2) throw std::invalid_argument("median_heuristic: need at least two points");
    auto row_of = [&](int i) -> const double* {
        return i < x.rows ? &x.data[static_cast<size_t>(i) * x.cols]
                          : &y.data[static_cast<size_t>(i - x.rows) * y.cols];
    };
    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(total) * (total - 1) / 2);
    for (int i = 0; i < total; ++i)
        for (int j = i + 1; j < total; ++j)
            dists.push_back(std::sqrt(sqdist(row_of(i), row_of(j), x.cols)));
    std::sort(dists.begin(), dists.end());
    const size_t n = dists.size();
    double med = (n % 2 == 1) ? dists[n / 2] : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
    if (med > 0.0) return med;
    // Degenerate pools: keep the result strictly positive.
    for (double d : dists)
        if (d > 0.0) return d;
    return 1.0;
}

MmdResult mmd2(const Matrix& x, const Matrix& y, const MmdConfig& cfg, bool with_grad) {
    if (x.cols != y.cols)
        throw std::invalid_argument("mmd2: dims differ: " + x.shape_str() + " vs " + y.shape_str());
    if (x.rows < 1 || y.rows < 1) throw std::invalid_argument("mmd2: empty sample");
    const bool unbiased = cfg.estimator == MmdEstimator::unbiased;
    if (unbiased && (x.rows < 2 || y.rows < 2))
        throw std::invalid_argument("mmd2: unbiased estimator needs >= 2 samples per side");

    MmdResult res;
    res.bandwidths_used = cfg.resolve_bandwidths(x, y);
    const double mix_w = 1.0 / res.bandwidths_used.size();
    const int m = x.rows, n = y.rows, d = x.cols;

    const Matrix dxx = pairwise_sqdist(x, x);
    const Matrix dyy = pairwise_sqdist(y, y);
    const Matrix dxy = pairwise_sqdist(x, y);

    for (double sigma : res.bandwidths_used) {
        // Only the within-sample terms drop their diagonals in the
        // unbiased form; the cross term keeps all m*n pairs.
        res.mmd_squared += mix_w * (kernel_mean(dxx, sigma, unbiased) +
                                    kernel_mean(dyy, sigma, unbiased) -
                                    2.0 * kernel_mean(dxy, sigma, false));
    }

    if (!with_grad) return res;

    Matrix gx(m, d), gy(n, d);
    const double w_xx = unbiased ? 1.0 / (static_cast<double>(m) * (m - 1))
                                 : 1.0 / (static_cast<double>(m) * m);
    const double w_yy = unbiased ? 1.0 / (static_cast<double>(n) * (n - 1))
                                 : 1.0 / (static_cast<double>(n) * n);
    const double w_xy = 1.0 / (static_cast<double>(m) * n);

    for (double sigma : res.bandwidths_used) {
        const double inv_s2 = 1.0 / (sigma * sigma);
        const double inv2s2 = 0.5 * inv_s2;
        // d k(u,v)/d u = k(u,v) * (v - u) / sigma^2; each output row is
        // written by exactly one iteration.
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * (m + n) * d > kParallelCutoff)
        for (int i = 0; i < m; ++i) {
            double* g = &gx.data[static_cast<size_t>(i) * d];
            const double* xi = &x.data[static_cast<size_t>(i) * d];
            for (int j = 0; j < m; ++j) {
                if (unbiased && j == i) continue;
                const double k = std::exp(-dxx(i, j) * inv2s2);
                const double c = mix_w * 2.0 * w_xx * k * inv_s2;
                const double* xj = &x.data[static_cast<size_t>(j) * d];
                for (int t = 0; t < d; ++t) g[t] += c * (xj[t] - xi[t]);
            }
            for (int j = 0; j < n; ++j) {
                const double k = std::exp(-dxy(i, j) * inv2s2);
                const double c = mix_w * 2.0 * w_xy * k * inv_s2;
                const double* yj = &y.data[static_cast<size_t>(j) * d];
                for (int t = 0; t < d; ++t) g[t] -= c * (yj[t] - xi[t]);
            }
        }
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * (m + n) * d > kParallelCutoff)
        for (int j = 0; j < n; ++j) {
            double* g = &gy.data[static_cast<size_t>(j) * d];
            const double* yj = &y.data[static_cast<size_t>(j) * d];
            for (int i = 0; i < n; ++i) {
                if (unbiased && i == j) continue;
                const double k = std::exp(-dyy(j, i) * inv2s2);
                const double c = mix_w * 2.0 * w_yy * k * inv_s2;
                const double* yi = &y.data[static_cast<size_t>(i) * d];
                for (int t = 0; t < d; ++t) g[t] += c * (yi[t] - yj[t]);
            }
            for (int i = 0; i < m; ++i) {
                const double k = std::exp(-dxy(i, j) * inv2s2);
                const double c = mix_w * 2.0 * w_xy * k * inv_s2;
                const double* xi = &x.data[static_cast<size_t>(i) * d];
                for (int t = 0; t < d; ++t) g[t] -= c * (xi[t] - yj[t]);
            }
        }
    }
    res.grad_source = std::move(gx);
    res.grad_target = std::move(gy);
    return res;
}

}  // namespace assocda

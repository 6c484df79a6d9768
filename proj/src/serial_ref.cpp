#include "assocda/serial_ref.hpp"

#include <cmath>
#include <stdexcept>

namespace assocda::serial {

namespace {

double sqdist_rows(const Matrix& x, int i, const Matrix& y, int j) {
    double s = 0.0;
    for (int c = 0; c < x.cols; ++c) {
        const double d = x(i, c) - y(j, c);
        s += d * d;
    }
    return s;
}

double kernel(const Matrix& x, int i, const Matrix& y, int j, double sigma) {
    return std::exp(-sqdist_rows(x, i, y, j) / (2.0 * sigma * sigma));
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("serial::matmul: shape mismatch");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

Matrix row_softmax(const Matrix& m) {
    Matrix out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i) {
        double mx = m(i, 0);
        for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m(i, j));
        double sum = 0.0;
        for (int j = 0; j < m.cols; ++j) sum += std::exp(m(i, j) - mx);
        for (int j = 0; j < m.cols; ++j) out(i, j) = std::exp(m(i, j) - mx) / sum;
    }
    return out;
}

double cross_entropy_rows(const Matrix& target, const Matrix& probs, double clamp) {
    if (!target.same_shape(probs))
        throw std::invalid_argument("serial::cross_entropy_rows: shape mismatch");
    double total = 0.0;
    for (int i = 0; i < target.rows; ++i)
        for (int j = 0; j < target.cols; ++j)
            if (target(i, j) != 0.0) total -= target(i, j) * std::log(std::max(probs(i, j), clamp));
    return total / target.rows;
}

Matrix rbf_kernel_matrix(const Matrix& x, const Matrix& y, double sigma) {
    if (x.cols != y.cols) throw std::invalid_argument("serial::rbf_kernel_matrix: dim mismatch");
    Matrix k(x.rows, y.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < y.rows; ++j) k(i, j) = kernel(x, i, y, j, sigma);
    return k;
}

double mmd2_biased(const Matrix& x, const Matrix& y, const std::vector<double>& sigmas) {
    const int m = x.rows, n = y.rows;
    double acc = 0.0;
    for (double sigma : sigmas) {
        double xx = 0.0, yy = 0.0, xy = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) xx += kernel(x, i, x, j, sigma);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) yy += kernel(y, i, y, j, sigma);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) xy += kernel(x, i, y, j, sigma);
        acc += xx / (static_cast<double>(m) * m) + yy / (static_cast<double>(n) * n) -
               2.0 * xy / (static_cast<double>(m) * n);
    }
    return acc / static_cast<double>(sigmas.size());
}

double mmd2_unbiased(const Matrix& x, const Matrix& y, const std::vector<double>& sigmas) {
    const int m = x.rows, n = y.rows;
    if (m < 2 || n < 2)
        throw std::invalid_argument("serial::mmd2_unbiased: needs >= 2 samples per side");
    double acc = 0.0;
    for (double sigma : sigmas) {
        double xx = 0.0, yy = 0.0, xy = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j) xx += kernel(x, i, x, j, sigma);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) yy += kernel(y, i, y, j, sigma);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) xy += kernel(x, i, y, j, sigma);
        acc += xx / (static_cast<double>(m) * (m - 1)) + yy / (static_cast<double>(n) * (n - 1)) -
               2.0 * xy / (static_cast<double>(m) * n);
    }
    return acc / static_cast<double>(sigmas.size());
}

}  // namespace assocda::serial

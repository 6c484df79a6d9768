#include "assocda/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace assocda {

namespace {

// Small matrices are common in the training loop (mini-batch sized); the
// parallel regions only pay off past this element count.
constexpr long kParallelCutoff = 16 * 1024;

[[noreturn]] void shape_error(const std::string& op, const Matrix& a, const Matrix& b) {
    throw std::invalid_argument(op + ": incompatible shapes " + a.shape_str() + " and " +
                                b.shape_str());
}

}  // namespace

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.rows; ++r) {
        if (static_cast<int>(rows[r].size()) != m.cols)
            throw std::invalid_argument("from_rows: ragged rows");
        for (int c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
    }
    return m;
}

std::string Matrix::shape_str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

bool is_finite(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error("max_abs_diff", a, b);
    double d = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) d = std::max(d, std::abs(a.data[i] - b.data[i]));
    return d;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) shape_error("matmul", a, b);
    Matrix c(a.rows, b.cols);
    const long work = static_cast<long>(a.rows) * b.cols * a.cols;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
        double* crow = &c.data[static_cast<size_t>(i) * c.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix row_softmax(const Matrix& m) {
    Matrix out(m.rows, m.cols);
    if (m.cols == 0) return out;
#pragma omp parallel for schedule(static) if (static_cast<long>(m.rows) * m.cols > kParallelCutoff)
    for (int i = 0; i < m.rows; ++i) {
        const double* src = &m.data[static_cast<size_t>(i) * m.cols];
        double* dst = &out.data[static_cast<size_t>(i) * m.cols];
        double mx = src[0];
        for (int j = 1; j < m.cols; ++j) mx = std::max(mx, src[j]);
        double sum = 0.0;
        for (int j = 0; j < m.cols; ++j) {
            dst[j] = std::exp(src[j] - mx);
            sum += dst[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < m.cols; ++j) dst[j] *= inv;
    }
    return out;
}

double cross_entropy_rows(const Matrix& target, const Matrix& probs, double clamp) {
    if (!target.same_shape(probs)) shape_error("cross_entropy_rows", target, probs);
    if (target.rows == 0) return 0.0;
    // Per-row partials accumulated serially afterwards keep the sum order
    // independent of the thread count.
    std::vector<double> row_sum(target.rows, 0.0);
#pragma omp parallel for schedule(static) \
    if (static_cast<long>(target.rows) * target.cols > kParallelCutoff)
    for (int i = 0; i < target.rows; ++i) {
        const double* t = &target.data[static_cast<size_t>(i) * target.cols];
        const double* p = &probs.data[static_cast<size_t>(i) * probs.cols];
        double s = 0.0;
        for (int j = 0; j < target.cols; ++j)
            if (t[j] != 0.0) s -= t[j] * std::log(std::max(p[j], clamp));
        row_sum[i] = s;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total / target.rows;
}

void add_scaled(Matrix& dst, const Matrix& src, double scale) {
    if (!dst.same_shape(src)) shape_error("add_scaled", dst, src);
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += scale * src.data[i];
}

Matrix scaled(const Matrix& m, double scale) {
    Matrix out = m;
    for (double& v : out.data) v *= scale;
    return out;
}

}  // namespace assocda

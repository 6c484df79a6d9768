#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace assocda {

// Dense row-major matrix of doubles. All exported operations keep entries
// finite; softmax rows are max-shifted so saturated inputs cannot overflow.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // row-major, size rows*cols

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix identity(int n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;
};

bool is_finite(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// c = a * b. Parallel loops assign disjoint output elements with a fixed
// per-element accumulation order, so results are bit-identical for any
// thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

// Softmax applied independently to each row, stabilized by subtracting the
// row maximum before exponentiation. Output rows sum to 1 within 1e-9.
Matrix row_softmax(const Matrix& m);

// (1/rows) * sum_ij -target(i,j) * ln(max(probs(i,j), clamp)).
// Natural logarithm; entries at or below the clamp are treated as clamp.
double cross_entropy_rows(const Matrix& target, const Matrix& probs, double clamp);

// In-place helpers used by the loss and network modules.
void add_scaled(Matrix& dst, const Matrix& src, double scale);  // dst += scale*src
Matrix scaled(const Matrix& m, double scale);

}  // namespace assocda

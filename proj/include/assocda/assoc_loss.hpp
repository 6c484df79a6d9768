#pragma once

#include <vector>

#include "assocda/matrix.hpp"

namespace assocda {

// Batch of embedding vectors, one sample per row.
struct EmbeddingBatch {
    Matrix m;

    EmbeddingBatch() = default;
    explicit EmbeddingBatch(Matrix mat);  // validates n,d >= 1 and finiteness

    int samples() const { return m.rows; }
    int dim() const { return m.cols; }
};

// Per-sample class indices in [0, num_classes).
struct LabelVector {
    std::vector<int> labels;
    int num_classes = 0;

    LabelVector() = default;
    LabelVector(std::vector<int> l, int c);  // validates range

    int size() const { return static_cast<int>(labels.size()); }
};

// Row-stochastic transition matrix; rows sum to 1 within 1e-9.
struct StochasticMatrix {
    Matrix p;
};

struct AssocConfig {
    double walker_weight = 1.0;  // fixed to 1 by default; the global loss
                                 // scale is carried by the harness alpha
    double visit_weight = 0.5;
    double clamp = 1e-12;  // log clamp; clamped entries have zero gradient

    void validate() const;
};

struct AssocResult {
    double total = 0.0;
    double walker = 0.0;
    double visit = 0.0;
    Matrix grad_source;  // d total / d A
    Matrix grad_target;  // d total / d B
};

// M(i,j) = <A_i, B_j>.
Matrix similarity_matrix(const EmbeddingBatch& a, const EmbeddingBatch& b);

// Softmax transition probabilities in both directions: first is row-softmax
// of M (source -> target), second is row-softmax of M^T (target -> source).
std::pair<StochasticMatrix, StochasticMatrix> transitions(const Matrix& m);

// Two-step round-trip probabilities, p_ab * p_ba.
StochasticMatrix roundtrip(const StochasticMatrix& p_ab, const StochasticMatrix& p_ba);

// T(i,j) = 1/|class of i| when labels match, 0 otherwise.
StochasticMatrix walker_target(const LabelVector& labels);

// Column means of p_ab: the probability of landing on each target sample,
// normalized to a distribution over targets.
std::vector<double> visit_distribution(const StochasticMatrix& p_ab);

// Walker + visit losses of the association objective together with exact
// analytic gradients with respect to both embedding batches.
AssocResult assoc_forward_backward(const EmbeddingBatch& a, const EmbeddingBatch& b,
                                   const LabelVector& labels, const AssocConfig& cfg);

// Loss values only (no gradients); used by finite-difference checks.
AssocResult assoc_forward(const EmbeddingBatch& a, const EmbeddingBatch& b,
                          const LabelVector& labels, const AssocConfig& cfg);

}  // namespace assocda

#include "assocda/assoc_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace assocda {

EmbeddingBatch::EmbeddingBatch(Matrix mat) : m(std::move(mat)) {
    if (m.rows < 1 || m.cols < 1)
        throw std::invalid_argument("EmbeddingBatch: need at least one sample and one dimension, got " +
                                    m.shape_str());
    if (!is_finite(m)) throw std::invalid_argument("EmbeddingBatch: non-finite entries");
}

LabelVector::LabelVector(std::vector<int> l, int c) : labels(std::move(l)), num_classes(c) {
    for (int v : labels)
        if (v < 0 || v >= num_classes)
            throw std::invalid_argument("LabelVector: label " + std::to_string(v) +
                                        " outside [0, " + std::to_string(num_classes) + ")");
}

void AssocConfig::validate() const {
    if (walker_weight < 0.0 || visit_weight < 0.0)
        throw std::invalid_argument("AssocConfig: loss weights must be >= 0");
    if (!(clamp > 0.0) || clamp > 1e-6)
        throw std::invalid_argument("AssocConfig: clamp must lie in (0, 1e-6]");
}

Matrix similarity_matrix(const EmbeddingBatch& a, const EmbeddingBatch& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("similarity_matrix: embedding dims differ: " + a.m.shape_str() +
                                    " vs " + b.m.shape_str());
    return matmul(a.m, transpose(b.m));
}

std::pair<StochasticMatrix, StochasticMatrix> transitions(const Matrix& m) {
    return {StochasticMatrix{row_softmax(m)}, StochasticMatrix{row_softmax(transpose(m))}};
}

StochasticMatrix roundtrip(const StochasticMatrix& p_ab, const StochasticMatrix& p_ba) {
    return StochasticMatrix{matmul(p_ab.p, p_ba.p)};
}

StochasticMatrix walker_target(const LabelVector& labels) {
    const int n = labels.size();
    std::vector<int> count(labels.num_classes, 0);
    for (int v : labels.labels) ++count[v];
    Matrix t(n, n);
    for (int i = 0; i < n; ++i) {
        const int ci = labels.labels[i];
        const double w = 1.0 / count[ci];
        for (int j = 0; j < n; ++j)
            if (labels.labels[j] == ci) t(i, j) = w;
    }
    return StochasticMatrix{std::move(t)};
}

std::vector<double> visit_distribution(const StochasticMatrix& p_ab) {
    const Matrix& p = p_ab.p;
    std::vector<double> v(p.cols, 0.0);
    for (int i = 0; i < p.rows; ++i)
        for (int j = 0; j < p.cols; ++j) v[j] += p(i, j);
    const double inv = 1.0 / p.rows;
    for (double& x : v) x *= inv;
    return v;
}

namespace {

// d(row softmax)/d(logits) applied to an upstream gradient: for each row,
// dm_j = s_j * (g_j - sum_k g_k * s_k).
Matrix softmax_backward(const Matrix& softmax_out, const Matrix& grad_out) {
    Matrix grad_in(softmax_out.rows, softmax_out.cols);
    for (int i = 0; i < softmax_out.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < softmax_out.cols; ++j) dot += grad_out(i, j) * softmax_out(i, j);
        for (int j = 0; j < softmax_out.cols; ++j)
            grad_in(i, j) = softmax_out(i, j) * (grad_out(i, j) - dot);
    }
    return grad_in;
}

AssocResult assoc_impl(const EmbeddingBatch& a, const EmbeddingBatch& b,
                       const LabelVector& labels, const AssocConfig& cfg, bool with_grad) {
    cfg.validate();
    if (a.samples() == 0 || b.samples() == 0)
        throw std::invalid_argument("assoc loss: empty embedding batch");
    if (labels.size() != a.samples())
        throw std::invalid_argument("assoc loss: label count " + std::to_string(labels.size()) +
                                    " != source samples " + std::to_string(a.samples()));
    const int n_s = a.samples();
    const int n_t = b.samples();

    const Matrix m = similarity_matrix(a, b);
    auto [p_ab, p_ba] = transitions(m);
    const StochasticMatrix p_aba = roundtrip(p_ab, p_ba);
    const StochasticMatrix t = walker_target(labels);
    const std::vector<double> visit = visit_distribution(p_ab);

    AssocResult res;
    res.walker = cross_entropy_rows(t.p, p_aba.p, cfg.clamp);
    double visit_loss = 0.0;
    for (double q : visit) visit_loss -= std::log(std::max(q, cfg.clamp));
    res.visit = visit_loss / n_t;
    res.total = cfg.walker_weight * res.walker + cfg.visit_weight * res.visit;

    if (!with_grad) return res;

    // Walker: d/dR of (1/n_s) sum -T * ln(max(R, clamp)); entries under the
    // clamp sit in the dead zone and contribute nothing.
    Matrix g_roundtrip(n_s, n_s);
    for (int i = 0; i < n_s; ++i)
        for (int j = 0; j < n_s; ++j) {
            const double tij = t.p(i, j);
            const double rij = p_aba.p(i, j);
            if (tij != 0.0 && rij > cfg.clamp)
                g_roundtrip(i, j) = -cfg.walker_weight * tij / (n_s * rij);
        }

    // R = p_ab * p_ba.
    Matrix g_p_ab = matmul(g_roundtrip, transpose(p_ba.p));
    Matrix g_p_ba = matmul(transpose(p_ab.p), g_roundtrip);

    // Visit: d/dp_ab of -(1/n_t) sum_j ln(max(v_j, clamp)) with
    // v_j = (1/n_s) sum_i p_ab(i,j).
    for (int j = 0; j < n_t; ++j) {
        if (visit[j] <= cfg.clamp) continue;
        const double g = -cfg.visit_weight / (n_t * visit[j] * n_s);
        for (int i = 0; i < n_s; ++i) g_p_ab(i, j) += g;
    }

    // Through both softmaxes back to the similarity matrix.
    Matrix g_m = softmax_backward(p_ab.p, g_p_ab);
    const Matrix g_mt = softmax_backward(p_ba.p, g_p_ba);
    const Matrix g_mt_t = transpose(g_mt);
    add_scaled(g_m, g_mt_t, 1.0);

    // M = A * B^T.
    res.grad_source = matmul(g_m, b.m);
    res.grad_target = matmul(transpose(g_m), a.m);
    return res;
}

}  // namespace

AssocResult assoc_forward_backward(const EmbeddingBatch& a, const EmbeddingBatch& b,
                                   const LabelVector& labels, const AssocConfig& cfg) {
    return assoc_impl(a, b, labels, cfg, true);
}

AssocResult assoc_forward(const EmbeddingBatch& a, const EmbeddingBatch& b,
                          const LabelVector& labels, const AssocConfig& cfg) {
    return assoc_impl(a, b, labels, cfg, false);
}

}  // namespace assocda

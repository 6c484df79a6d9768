#include "assocda/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "assocda/assoc_loss.hpp"
#include "assocda/mmd.hpp"
#include "assocda/network.hpp"
#include "assocda/rng.hpp"

namespace assocda {

double fd_rel_err(double analytic, double fd) {
    const double scale = std::max(std::abs(analytic), std::abs(fd));
    if (scale <= 1e-6) return 0.0;
    return std::abs(analytic - fd) / scale;
}

std::pair<double, size_t> max_grad_rel_err_at(Matrix& x, const Matrix& analytic,
                                              const std::function<double()>& f, double h) {
    if (!x.same_shape(analytic))
        throw std::invalid_argument("max_grad_rel_err: gradient shape mismatch");
    double worst = 0.0;
    size_t worst_idx = 0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double saved = x.data[i];
        x.data[i] = saved + h;
        const double f_plus = f();
        x.data[i] = saved - h;
        const double f_minus = f();
        x.data[i] = saved;
        const double err = fd_rel_err(analytic.data[i], (f_plus - f_minus) / (2.0 * h));
        if (err > worst) {
            worst = err;
            worst_idx = i;
        }
    }
    return {worst, worst_idx};
}

double max_grad_rel_err(Matrix& x, const Matrix& analytic, const std::function<double()>& f,
                        double h) {
    return max_grad_rel_err_at(x, analytic, f, h).first;
}

bool GradcheckReport::all_below(double tol) const {
    return std::all_of(entries.begin(), entries.end(),
                       [tol](const GradcheckEntry& e) { return e.max_rel_err < tol; });
}

namespace {

// Tracks the worst entry across instances together with where it happened.
struct Probe {
    double err = 0.0;
    std::string loc = "-";

    void consider(int instance, const std::string& tensor, std::pair<double, size_t> e) {
        if (e.first > err) {
            err = e.first;
            loc = "instance " + std::to_string(instance) + ", " + tensor + "[" +
                  std::to_string(e.second) + "]";
        }
    }
};

Matrix random_matrix(int rows, int cols, Rng& rng, double scale) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = scale * rng.normal();
    return m;
}

LabelVector random_labels(int n, int num_classes, Rng& rng) {
    std::vector<int> l(n);
    for (int& v : l) v = rng.below(num_classes);
    return LabelVector(std::move(l), num_classes);
}

void assoc_instance(int idx, Rng& rng, double walker_w, double visit_w, bool flip, Probe& probe) {
    const int n_s = 2 + rng.below(7);  // 2..8
    const int n_t = 2 + rng.below(7);
    const int d = 2 + rng.below(4);  // 2..5
    Matrix a = random_matrix(n_s, d, rng, 0.8);
    Matrix b = random_matrix(n_t, d, rng, 0.8);
    const LabelVector labels = random_labels(n_s, 2 + rng.below(2), rng);
    AssocConfig cfg;
    cfg.walker_weight = walker_w;
    cfg.visit_weight = visit_w;

    AssocResult res = assoc_forward_backward(EmbeddingBatch(a), EmbeddingBatch(b), labels, cfg);
    if (flip) {
        for (double& v : res.grad_source.data) v = -v;
        for (double& v : res.grad_target.data) v = -v;
    }
    const auto loss = [&]() {
        return assoc_forward(EmbeddingBatch(a), EmbeddingBatch(b), labels, cfg).total;
    };
    probe.consider(idx, "grad_source", max_grad_rel_err_at(a, res.grad_source, loss));
    probe.consider(idx, "grad_target", max_grad_rel_err_at(b, res.grad_target, loss));
}

void mmd_instance(int idx, Rng& rng, MmdEstimator estimator, Probe& probe) {
    const int m = 2 + rng.below(7);
    const int n = 2 + rng.below(7);
    const int d = 2 + rng.below(4);
    Matrix x = random_matrix(m, d, rng, 1.0);
    Matrix y = random_matrix(n, d, rng, 1.0);
    // Pinned bandwidth: the median heuristic depends on the data and would
    // leak into the finite differences.
    MmdConfig cfg;
    cfg.use_median_heuristic = false;
    cfg.fixed_bandwidth = 0.9;
    cfg.bandwidth_multipliers = {0.5, 1.0, 2.0};
    cfg.estimator = estimator;
    const MmdResult res = mmd2(x, y, cfg, true);
    const auto loss = [&]() { return mmd2(x, y, cfg, false).mmd_squared; };
    probe.consider(idx, "grad_source", max_grad_rel_err_at(x, *res.grad_source, loss));
    probe.consider(idx, "grad_target", max_grad_rel_err_at(y, *res.grad_target, loss));
}

MlpSpec small_spec(Rng& rng, int input_dim, int num_classes) {
    MlpSpec spec;
    spec.input_dim = input_dim;
    spec.hidden_dims = {3 + rng.below(3)};
    spec.embedding_dim = 2 + rng.below(3);
    spec.num_classes = num_classes;
    spec.activation = Activation::tanh;  // smooth, finite-difference friendly
    spec.seed = rng.below(1 << 20);
    return spec;
}

void param_check(int idx, MlpParams& params, const MlpGrads& g, const std::function<double()>& f,
                 Probe& probe) {
    auto tensors = param_tensors(params);
    auto grads = param_tensors(g);
    for (size_t t = 0; t < tensors.size(); ++t)
        probe.consider(idx, "param_tensor" + std::to_string(t),
                       max_grad_rel_err_at(*tensors[t], *grads[t], f));
}

void classification_instance(int idx, Rng& rng, Probe& probe) {
    const int n = 2 + rng.below(7);
    const int num_classes = 2 + rng.below(2);
    const MlpSpec spec = small_spec(rng, 2 + rng.below(3), num_classes);
    MlpParams params = init_params(spec);
    const Matrix inputs = random_matrix(n, spec.input_dim, rng, 1.0);
    const LabelVector labels = random_labels(n, num_classes, rng);

    const ForwardTrace trace = forward(spec, params, inputs);
    const MlpGrads grads = classification_loss_and_grads(spec, trace, params, labels).second;
    const auto loss = [&]() {
        return classification_loss_and_grads(spec, forward(spec, params, inputs), params, labels)
            .first;
    };
    param_check(idx, params, grads, loss, probe);
}

// Full composite objective: classification + alpha * association, checked
// through every network parameter.
void composite_assoc_instance(int idx, Rng& rng, Probe& probe) {
    const int n_s = 2 + rng.below(7);
    const int n_t = 2 + rng.below(7);
    const MlpSpec spec = small_spec(rng, 2 + rng.below(3), 2);
    MlpParams params = init_params(spec);
    const Matrix xs = random_matrix(n_s, spec.input_dim, rng, 1.0);
    const Matrix xt = random_matrix(n_t, spec.input_dim, rng, 1.0);
    const LabelVector labels = random_labels(n_s, 2, rng);
    const double alpha = 0.7;
    AssocConfig acfg;
    acfg.visit_weight = 0.5;

    const auto loss = [&]() {
        const ForwardTrace ts = forward(spec, params, xs);
        const ForwardTrace tt = forward(spec, params, xt);
        const double cls = classification_loss_and_grads(spec, ts, params, labels).first;
        return cls + alpha * assoc_forward(ts.embeddings, tt.embeddings, labels, acfg).total;
    };

    const ForwardTrace ts = forward(spec, params, xs);
    const ForwardTrace tt = forward(spec, params, xt);
    MlpGrads grads = classification_loss_and_grads(spec, ts, params, labels).second;
    const AssocResult res = assoc_forward_backward(ts.embeddings, tt.embeddings, labels, acfg);
    accumulate(grads, backprop_external(spec, ts, params, res.grad_source), alpha);
    accumulate(grads, backprop_external(spec, tt, params, res.grad_target), alpha);
    param_check(idx, params, grads, loss, probe);
}

void composite_mmd_instance(int idx, Rng& rng, Probe& probe) {
    const int n_s = 2 + rng.below(7);
    const int n_t = 2 + rng.below(7);
    const MlpSpec spec = small_spec(rng, 2 + rng.below(3), 2);
    MlpParams params = init_params(spec);
    const Matrix xs = random_matrix(n_s, spec.input_dim, rng, 1.0);
    const Matrix xt = random_matrix(n_t, spec.input_dim, rng, 1.0);
    const LabelVector labels = random_labels(n_s, 2, rng);
    const double weight = 0.8;
    MmdConfig mcfg;
    mcfg.use_median_heuristic = false;
    mcfg.fixed_bandwidth = 1.1;
    mcfg.bandwidth_multipliers = {1.0, 2.0};

    const auto loss = [&]() {
        const ForwardTrace ts = forward(spec, params, xs);
        const ForwardTrace tt = forward(spec, params, xt);
        const double cls = classification_loss_and_grads(spec, ts, params, labels).first;
        return cls + weight * mmd2(ts.embeddings.m, tt.embeddings.m, mcfg, false).mmd_squared;
    };

    const ForwardTrace ts = forward(spec, params, xs);
    const ForwardTrace tt = forward(spec, params, xt);
    MlpGrads grads = classification_loss_and_grads(spec, ts, params, labels).second;
    const MmdResult res = mmd2(ts.embeddings.m, tt.embeddings.m, mcfg, true);
    accumulate(grads, backprop_external(spec, ts, params, *res.grad_source), weight);
    accumulate(grads, backprop_external(spec, tt, params, *res.grad_target), weight);
    param_check(idx, params, grads, loss, probe);
}

}  // namespace

GradcheckReport run_gradcheck(uint64_t seed, int instances, bool flip_walker_grad) {
    if (instances < 1) throw std::invalid_argument("run_gradcheck: instances must be >= 1");
    GradcheckReport report;
    const auto run = [&](const std::string& name,
                         const std::function<void(int, Rng&, Probe&)>& one) {
        Probe probe;
        for (int i = 0; i < instances; ++i) {
            Rng rng(seed, 100 + i);
            one(i, rng, probe);
        }
        report.entries.push_back({name, probe.err, probe.loc});
    };
    run("walker", [&](int i, Rng& r, Probe& p) { assoc_instance(i, r, 1.0, 0.0, flip_walker_grad, p); });
    run("visit", [&](int i, Rng& r, Probe& p) { assoc_instance(i, r, 0.0, 1.0, false, p); });
    run("assoc_combined", [&](int i, Rng& r, Probe& p) { assoc_instance(i, r, 1.0, 0.5, false, p); });
    run("mmd_biased", [&](int i, Rng& r, Probe& p) { mmd_instance(i, r, MmdEstimator::biased, p); });
    run("mmd_unbiased", [&](int i, Rng& r, Probe& p) { mmd_instance(i, r, MmdEstimator::unbiased, p); });
    run("classification", [&](int i, Rng& r, Probe& p) { classification_instance(i, r, p); });
    run("composite_assoc", [&](int i, Rng& r, Probe& p) { composite_assoc_instance(i, r, p); });
    run("composite_mmd", [&](int i, Rng& r, Probe& p) { composite_mmd_instance(i, r, p); });
    return report;
}

}  // namespace assocda

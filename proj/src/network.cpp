#include "assocda/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "assocda/rng.hpp"

namespace assocda {

void MlpSpec::validate() const {
    if (input_dim < 1 || embedding_dim < 1 || num_classes < 1)
        throw std::invalid_argument("MlpSpec: dims must be >= 1");
    for (int h : hidden_dims)
        if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
}

std::vector<int> MlpSpec::layer_dims() const {
    std::vector<int> dims = hidden_dims;
    dims.push_back(embedding_dim);
    dims.push_back(num_classes);
    return dims;
}

size_t MlpParams::num_scalars() const {
    size_t n = 0;
    for (const Matrix& w : weights) n += w.data.size();
    for (const Matrix& b : biases) n += b.data.size();
    return n;
}

MlpParams init_params(const MlpSpec& spec) {
    spec.validate();
    Rng rng(spec.seed, /*stream=*/0x1417);
    MlpParams p;
    int fan_in = spec.input_dim;
    for (int out : spec.layer_dims()) {
        Matrix w(fan_in, out);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : w.data) v = scale * rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.push_back(Matrix(1, out));
        fan_in = out;
    }
    return p;
}

namespace {

void apply_activation(Matrix& m, Activation act) {
    if (act == Activation::relu) {
        for (double& v : m.data) v = v > 0.0 ? v : 0.0;
    } else {
        for (double& v : m.data) v = std::tanh(v);
    }
}

// Derivative expressed through pre-activation z and activation a.
double activation_grad(double z, double a, Activation act) {
    return act == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix z = matmul(x, w);
    for (int i = 0; i < z.rows; ++i)
        for (int j = 0; j < z.cols; ++j) z(i, j) += b(0, j);
    return z;
}

Matrix colsum(const Matrix& m) {
    Matrix s(1, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) s(0, j) += m(i, j);
    return s;
}

// Backward pass from a gradient on the embedding activations (and
// optionally on the logits) down to every parameter.
MlpGrads backprop_impl(const MlpSpec& spec, const ForwardTrace& trace, const MlpParams& params,
                       const Matrix* grad_logits, const Matrix* grad_embeddings) {
    MlpGrads g = zero_grads(params);
    const int layers = params.layer_count();  // hidden..., embedding, logits
    const int emb_layer = layers - 2;

    Matrix delta;  // gradient w.r.t. current layer activations
    if (grad_logits) {
        g.weights[layers - 1] = matmul(transpose(trace.act[emb_layer]), *grad_logits);
        g.biases[layers - 1] = colsum(*grad_logits);
        delta = matmul(*grad_logits, transpose(params.weights[layers - 1]));
    } else {
        delta = Matrix(trace.embeddings.samples(), trace.embeddings.dim());
    }
    if (grad_embeddings) {
        if (!delta.same_shape(*grad_embeddings))
            throw std::invalid_argument("backprop: embedding gradient shape " +
                                        grad_embeddings->shape_str() + " != embeddings shape " +
                                        delta.shape_str());
        add_scaled(delta, *grad_embeddings, 1.0);
    }

    for (int l = emb_layer; l >= 0; --l) {
        // The embedding layer is linear; hidden layers carry the activation.
        if (l != emb_layer) {
            for (int i = 0; i < delta.rows; ++i)
                for (int j = 0; j < delta.cols; ++j)
                    delta(i, j) *= activation_grad(trace.pre[l](i, j), trace.act[l](i, j),
                                                   spec.activation);
        }
        const Matrix& below = l == 0 ? trace.inputs : trace.act[l - 1];
        g.weights[l] = matmul(transpose(below), delta);
        g.biases[l] = colsum(delta);
        if (l > 0) delta = matmul(delta, transpose(params.weights[l]));
    }
    return g;
}

}  // namespace

ForwardTrace forward(const MlpSpec& spec, const MlpParams& params, const Matrix& inputs) {
    if (inputs.cols != spec.input_dim)
        throw std::invalid_argument("forward: input dim " + std::to_string(inputs.cols) +
                                    " != spec input_dim " + std::to_string(spec.input_dim));
    ForwardTrace t;
    t.inputs = inputs;
    const int layers = params.layer_count();
    const Matrix* below = &t.inputs;
    for (int l = 0; l < layers - 1; ++l) {
        Matrix z = affine(*below, params.weights[l], params.biases[l]);
        t.pre.push_back(z);
        if (l != layers - 2) apply_activation(z, spec.activation);  // embedding stays linear
        t.act.push_back(std::move(z));
        below = &t.act.back();
    }
    t.embeddings = EmbeddingBatch(t.act.back());
    t.logits = affine(t.act.back(), params.weights[layers - 1], params.biases[layers - 1]);
    return t;
}

std::pair<double, MlpGrads> classification_loss_and_grads(const MlpSpec& spec,
                                                          const ForwardTrace& trace,
                                                          const MlpParams& params,
                                                          const LabelVector& labels) {
    const int n = trace.logits.rows;
    const int c = trace.logits.cols;
    if (labels.size() != n)
        throw std::invalid_argument("classification loss: " + std::to_string(labels.size()) +
                                    " labels for batch of " + std::to_string(n));
    for (int v : labels.labels)
        if (v >= c)
            throw std::invalid_argument("classification loss: label " + std::to_string(v) +
                                        " >= num_classes " + std::to_string(c));

    // loss_i = logsumexp(z_i) - z_{i, y_i}; finite even for saturated logits.
    const Matrix probs = row_softmax(trace.logits);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double mx = trace.logits(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, trace.logits(i, j));
        double lse = 0.0;
        for (int j = 0; j < c; ++j) lse += std::exp(trace.logits(i, j) - mx);
        loss += mx + std::log(lse) - trace.logits(i, labels.labels[i]);
    }
    loss /= n;

    Matrix grad_logits = probs;
    for (int i = 0; i < n; ++i) grad_logits(i, labels.labels[i]) -= 1.0;
    for (double& v : grad_logits.data) v /= n;

    return {loss, backprop_impl(spec, trace, params, &grad_logits, nullptr)};
}

MlpGrads backprop_external(const MlpSpec& spec, const ForwardTrace& trace,
                           const MlpParams& params, const Matrix& grad_embeddings) {
    return backprop_impl(spec, trace, params, nullptr, &grad_embeddings);
}

MlpGrads zero_grads(const MlpParams& params) {
    MlpGrads g;
    for (const Matrix& w : params.weights) g.weights.push_back(Matrix(w.rows, w.cols));
    for (const Matrix& b : params.biases) g.biases.push_back(Matrix(b.rows, b.cols));
    return g;
}

void accumulate(MlpGrads& into, const MlpGrads& from, double scale) {
    for (size_t l = 0; l < into.weights.size(); ++l) {
        add_scaled(into.weights[l], from.weights[l], scale);
        add_scaled(into.biases[l], from.biases[l], scale);
    }
}

OptimizerState OptimizerState::init(const MlpParams& params) {
    OptimizerState s;
    for (const Matrix& w : params.weights) {
        s.m_w.push_back(Matrix(w.rows, w.cols));
        s.v_w.push_back(Matrix(w.rows, w.cols));
    }
    for (const Matrix& b : params.biases) {
        s.m_b.push_back(Matrix(b.rows, b.cols));
        s.v_b.push_back(Matrix(b.rows, b.cols));
    }
    return s;
}

namespace {

void adam_update(Matrix& p, const Matrix& g, Matrix& m, Matrix& v, double lr, double b1,
                 double b2, double eps, double bc1, double bc2) {
    for (size_t i = 0; i < p.data.size(); ++i) {
        m.data[i] = b1 * m.data[i] + (1.0 - b1) * g.data[i];
        v.data[i] = b2 * v.data[i] + (1.0 - b2) * g.data[i] * g.data[i];
        const double mhat = m.data[i] / bc1;
        const double vhat = v.data[i] / bc2;
        p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

std::pair<MlpParams, OptimizerState> optimizer_step(const MlpParams& params,
                                                    const MlpGrads& grads,
                                                    OptimizerState state, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("optimizer_step: lr must be positive");
    MlpParams next = params;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t l = 0; l < next.weights.size(); ++l) {
        adam_update(next.weights[l], grads.weights[l], state.m_w[l], state.v_w[l], lr,
                    state.beta1, state.beta2, state.epsilon, bc1, bc2);
        adam_update(next.biases[l], grads.biases[l], state.m_b[l], state.v_b[l], lr, state.beta1,
                    state.beta2, state.epsilon, bc1, bc2);
    }
    return {std::move(next), std::move(state)};
}

std::vector<int> predict(const Matrix& logits) {
    std::vector<int> out(logits.rows);
    for (int i = 0; i < logits.rows; ++i) {
        int best = 0;
        for (int j = 1; j < logits.cols; ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        out[i] = best;
    }
    return out;
}

double error_pct(const MlpSpec& spec, const MlpParams& params, const Matrix& inputs,
                 const LabelVector& labels) {
    const ForwardTrace t = forward(spec, params, inputs);
    const std::vector<int> pred = predict(t.logits);
    int wrong = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] != labels.labels[i]) ++wrong;
    return 100.0 * wrong / static_cast<double>(pred.size());
}

void save_checkpoint(const std::string& path, const MlpSpec& spec, const MlpParams& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << "assocda-checkpoint v1\n";
    out << "input_dim " << spec.input_dim << "\n";
    out << "hidden_dims";
    for (int h : spec.hidden_dims) out << " " << h;
    out << "\n";
    out << "embedding_dim " << spec.embedding_dim << "\n";
    out << "num_classes " << spec.num_classes << "\n";
    out << "activation " << (spec.activation == Activation::relu ? "relu" : "tanh") << "\n";
    out << "seed " << spec.seed << "\n";
    out << "scalars " << params.num_scalars() << "\n";
    char buf[64];
    for (const Matrix* t : param_tensors(params)) {
        for (double v : t->data) {
            std::snprintf(buf, sizeof(buf), "%a", v);
            out << buf << "\n";
        }
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<MlpSpec, MlpParams> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "assocda-checkpoint v1")
        throw std::runtime_error("load_checkpoint: bad header in " + path);

    MlpSpec spec;
    std::string key;
    size_t scalars = 0;
    while (in >> key) {
        if (key == "input_dim") in >> spec.input_dim;
        else if (key == "hidden_dims") {
            spec.hidden_dims.clear();
            std::getline(in, line);
            std::istringstream hs(line);
            int h;
            while (hs >> h) spec.hidden_dims.push_back(h);
        } else if (key == "embedding_dim") in >> spec.embedding_dim;
        else if (key == "num_classes") in >> spec.num_classes;
        else if (key == "activation") {
            std::string a;
            in >> a;
            spec.activation = a == "tanh" ? Activation::tanh : Activation::relu;
        } else if (key == "seed") in >> spec.seed;
        else if (key == "scalars") {
            in >> scalars;
            break;
        } else
            throw std::runtime_error("load_checkpoint: unknown key '" + key + "'");
    }
    spec.validate();

    MlpParams params = init_params(spec);
    if (params.num_scalars() != scalars)
        throw std::runtime_error("load_checkpoint: scalar count mismatch in " + path);
    for (Matrix* t : param_tensors(params))
        for (double& v : t->data) {
            std::string tok;
            if (!(in >> tok)) throw std::runtime_error("load_checkpoint: truncated " + path);
            v = std::strtod(tok.c_str(), nullptr);
        }
    return {spec, std::move(params)};
}

std::vector<Matrix*> param_tensors(MlpParams& p) {
    std::vector<Matrix*> out;
    for (Matrix& w : p.weights) out.push_back(&w);
    for (Matrix& b : p.biases) out.push_back(&b);
    return out;
}

std::vector<const Matrix*> param_tensors(const MlpParams& p) {
    std::vector<const Matrix*> out;
    for (const Matrix& w : p.weights) out.push_back(&w);
    for (const Matrix& b : p.biases) out.push_back(&b);
    return out;
}

}  // namespace assocda

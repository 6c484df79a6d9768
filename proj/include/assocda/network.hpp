#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "assocda/assoc_loss.hpp"
#include "assocda/matrix.hpp"

namespace assocda {

enum class Activation { relu, tanh };

// Feed-forward classifier: hidden layers with the configured activation,
// then a linear embedding layer, then a linear logits layer. The embedding
// is the last layer before the softmax classifier.
struct MlpSpec {
    int input_dim = 1;
    std::vector<int> hidden_dims;
    int embedding_dim = 64;
    int num_classes = 2;
    Activation activation = Activation::relu;
    uint64_t seed = 1;

    void validate() const;
    // Layer output sizes in order: hidden..., embedding, logits.
    std::vector<int> layer_dims() const;
};

struct MlpParams {
    std::vector<Matrix> weights;  // weights[l] is (in_l x out_l)
    std::vector<Matrix> biases;   // biases[l] is (1 x out_l)

    int layer_count() const { return static_cast<int>(weights.size()); }
    size_t num_scalars() const;
};

using MlpGrads = MlpParams;

struct ForwardTrace {
    Matrix inputs;
    std::vector<Matrix> pre;  // pre-activation per layer (excluding logits)
    std::vector<Matrix> act;  // post-activation per layer (excluding logits)
    EmbeddingBatch embeddings;
    Matrix logits;
};

// Weights drawn zero-mean with std 1/sqrt(fan_in), biases zero;
// deterministic in spec.seed.
MlpParams init_params(const MlpSpec& spec);

ForwardTrace forward(const MlpSpec& spec, const MlpParams& params, const Matrix& inputs);

// Mean softmax cross-entropy over the batch plus exact parameter gradients.
std::pair<double, MlpGrads> classification_loss_and_grads(const MlpSpec& spec,
                                                          const ForwardTrace& trace,
                                                          const MlpParams& params,
                                                          const LabelVector& labels);

// Parameter gradients induced by an externally supplied gradient on the
// embeddings (association or MMD loss); linear in grad_embeddings and
// additive with the classification gradients.
MlpGrads backprop_external(const MlpSpec& spec, const ForwardTrace& trace,
                           const MlpParams& params, const Matrix& grad_embeddings);

MlpGrads zero_grads(const MlpParams& params);
void accumulate(MlpGrads& into, const MlpGrads& from, double scale);

struct OptimizerState {
    std::vector<Matrix> m_w, v_w, m_b, v_b;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState init(const MlpParams& params);
};

// One adaptive-moment update with bias correction.
std::pair<MlpParams, OptimizerState> optimizer_step(const MlpParams& params,
                                                    const MlpGrads& grads,
                                                    OptimizerState state, double lr);

// Classification helpers.
std::vector<int> predict(const Matrix& logits);
double error_pct(const MlpSpec& spec, const MlpParams& params, const Matrix& inputs,
                 const LabelVector& labels);

// Versioned text checkpoint; parameters stored as hex floats so reloading
// is bit-exact.
void save_checkpoint(const std::string& path, const MlpSpec& spec, const MlpParams& params);
std::pair<MlpSpec, MlpParams> load_checkpoint(const std::string& path);

// Flat views over every parameter tensor, used by finite-difference checks.
std::vector<Matrix*> param_tensors(MlpParams& p);
std::vector<const Matrix*> param_tensors(const MlpParams& p);

}  // namespace assocda

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "assocda/assoc_loss.hpp"
#include "assocda/matrix.hpp"
#include "assocda/rng.hpp"

namespace assocda {

enum class DomainTag { source, target };

// Sample collection for one domain. Target-tagged datasets keep their
// labels private: the training-facing accessor refuses them, only the
// evaluation accessor (and the explicit target-only ceiling promotion)
// can read them.
class DomainDataset {
  public:
    DomainDataset(Matrix inputs, DomainTag tag, int num_classes,
                  std::optional<LabelVector> labels);

    const Matrix& inputs() const { return inputs_; }
    DomainTag tag() const { return tag_; }
    int num_classes() const { return num_classes_; }
    int size() const { return inputs_.rows; }
    bool has_labels() const { return labels_.has_value(); }

    // Training-facing; throws for target-tagged datasets.
    const LabelVector& training_labels() const;
    // Evaluation-facing; available whenever labels exist.
    const LabelVector& eval_labels() const;
    // Source-tagged copy with labels visible, for the target-only ceiling.
    DomainDataset promote_to_labeled_source() const;

  private:
    Matrix inputs_;
    DomainTag tag_;
    int num_classes_;
    std::optional<LabelVector> labels_;
};

enum class GeneratorKind { two_moons, gaussian_grid, mnist_corrupt };

struct DomainPairSpec {
    GeneratorKind generator = GeneratorKind::two_moons;
    double rotation = 0.0;  // radians
    double translate_x = 0.0;
    double translate_y = 0.0;
    double noise_std = 0.1;
    double invert_prob = 0.5;  // mnist_corrupt only
    int train_samples = 1000;
    int test_samples = 1000;
    int num_classes = 4;  // gaussian_grid only
    uint64_t seed = 7;
    // IDX file paths, mnist_corrupt only.
    std::string train_images, train_labels, test_images, test_labels;
};

struct DomainPair {
    DomainDataset source;
    DomainDataset target;
    DomainDataset target_test;
};

// Interleaved half-circles; the target domain is the same draw rotated and
// translated, so a null shift reproduces the source inputs exactly.
DomainPair gen_two_moons_pair(const DomainPairSpec& spec);

// Grid of Gaussian blobs, one class per grid point, same shift scheme.
DomainPair gen_gaussian_grid_pair(const DomainPairSpec& spec);

// Big-endian IDX image/label pair; pixels scaled to [0,1].
enum class IdxErrorKind { bad_magic, truncated, count_mismatch };
class IdxError : public std::runtime_error {
  public:
    IdxError(IdxErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind(kind) {}
    IdxErrorKind kind;
};
DomainDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Per-sample inversion (x -> 1-x) with probability invert_prob, then
// Gaussian pixel noise clipped back to [0,1]. Result is target-tagged.
DomainDataset corrupt_to_target(const DomainDataset& source, double noise_std,
                                double invert_prob, Rng& rng);

DomainPair gen_mnist_corrupt_pair(const DomainPairSpec& spec);

DomainPair generate_pair(const DomainPairSpec& spec);

// Exactly per_class samples of every class, drawn without replacement and
// shuffled.
std::pair<Matrix, LabelVector> stratified_labeled_batch(const DomainDataset& ds, int per_class,
                                                        Rng& rng);

// Uniform sample of `size` rows without replacement.
Matrix unlabeled_batch(const DomainDataset& ds, int size, Rng& rng);

// CSV export/import, header: x0,...,xd,label,domain (label -1 when absent).
void save_dataset_csv(const std::string& path, const DomainDataset& ds);
DomainDataset load_dataset_csv(const std::string& path);

}  // namespace assocda

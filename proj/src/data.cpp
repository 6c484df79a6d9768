#include "assocda/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace assocda {

DomainDataset::DomainDataset(Matrix inputs, DomainTag tag, int num_classes,
                             std::optional<LabelVector> labels)
    : inputs_(std::move(inputs)), tag_(tag), num_classes_(num_classes),
      labels_(std::move(labels)) {
    if (labels_ && labels_->size() != inputs_.rows)
        throw std::invalid_argument("DomainDataset: " + std::to_string(labels_->size()) +
                                    " labels for " + std::to_string(inputs_.rows) + " samples");
}

const LabelVector& DomainDataset::training_labels() const {
    if (tag_ == DomainTag::target)
        throw std::logic_error("training_labels: target-domain labels are not available for training");
    if (!labels_) throw std::logic_error("training_labels: dataset has no labels");
    return *labels_;
}

const LabelVector& DomainDataset::eval_labels() const {
    if (!labels_) throw std::logic_error("eval_labels: dataset has no labels");
    return *labels_;
}

DomainDataset DomainDataset::promote_to_labeled_source() const {
    if (!labels_) throw std::logic_error("promote_to_labeled_source: dataset has no labels");
    return DomainDataset(inputs_, DomainTag::source, num_classes_, labels_);
}

namespace {

constexpr double kPi = 3.14159265358979323846;

void apply_shift(Matrix& points, double rotation, double tx, double ty) {
    const double c = std::cos(rotation), s = std::sin(rotation);
    for (int i = 0; i < points.rows; ++i) {
        const double x = points(i, 0), y = points(i, 1);
        points(i, 0) = c * x - s * y + tx;
        points(i, 1) = s * x + c * y + ty;
    }
}

// Base draw for the moons generator; classes interleave so per-class counts
// differ by at most one.
std::pair<Matrix, LabelVector> draw_moons(int n, double noise_std, Rng& rng) {
    Matrix pts(n, 2);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        const double t = rng.uniform() * kPi;
        double x, y;
        if (cls == 0) {
            x = std::cos(t);
            y = std::sin(t);
        } else {
            x = 1.0 - std::cos(t);
            y = 0.5 - std::sin(t);
        }
        pts(i, 0) = x + noise_std * rng.normal();
        pts(i, 1) = y + noise_std * rng.normal();
        labels[i] = cls;
    }
    return {std::move(pts), LabelVector(std::move(labels), 2)};
}

std::pair<Matrix, LabelVector> draw_grid(int n, int num_classes, double noise_std, Rng& rng) {
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_classes))));
    const double spacing = 2.0;
    std::vector<std::pair<double, double>> centers(num_classes);
    double mx = 0.0, my = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        centers[c] = {spacing * (c % side), spacing * (c / side)};
        mx += centers[c].first;
        my += centers[c].second;
    }
    mx /= num_classes;
    my /= num_classes;
    for (auto& ctr : centers) {
        ctr.first -= mx;
        ctr.second -= my;
    }
    Matrix pts(n, 2);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        const int cls = i % num_classes;
        pts(i, 0) = centers[cls].first + noise_std * rng.normal();
        pts(i, 1) = centers[cls].second + noise_std * rng.normal();
        labels[i] = cls;
    }
    return {std::move(pts), LabelVector(std::move(labels), num_classes)};
}

// Stream ids inside a pair generation; the train draw is re-seeded
// identically for source and target so the shift alone separates them.
constexpr uint64_t kTrainStream = 1;
constexpr uint64_t kTestStream = 2;
constexpr uint64_t kCorruptStream = 3;

DomainPair synthetic_pair(const DomainPairSpec& spec, int num_classes,
                          const std::function<std::pair<Matrix, LabelVector>(int, Rng&)>& draw) {
    if (spec.noise_std < 0.0) throw std::invalid_argument("pair spec: noise_std must be >= 0");
    Rng src_rng(spec.seed, kTrainStream);
    auto [src_pts, src_labels] = draw(spec.train_samples, src_rng);

    Rng tgt_rng(spec.seed, kTrainStream);
    auto [tgt_pts, tgt_labels] = draw(spec.train_samples, tgt_rng);
    apply_shift(tgt_pts, spec.rotation, spec.translate_x, spec.translate_y);

    Rng test_rng(spec.seed, kTestStream);
    auto [test_pts, test_labels] = draw(spec.test_samples, test_rng);
    apply_shift(test_pts, spec.rotation, spec.translate_x, spec.translate_y);

    return DomainPair{
        DomainDataset(std::move(src_pts), DomainTag::source, num_classes, std::move(src_labels)),
        DomainDataset(std::move(tgt_pts), DomainTag::target, num_classes, std::move(tgt_labels)),
        DomainDataset(std::move(test_pts), DomainTag::target, num_classes,
                      std::move(test_labels))};
}

}  // namespace

DomainPair gen_two_moons_pair(const DomainPairSpec& spec) {
    if (spec.rotation < 0.0 || spec.rotation > kPi / 2.0)
        throw std::invalid_argument("two_moons: rotation must lie in [0, pi/2]");
    return synthetic_pair(spec, 2, [&](int n, Rng& rng) {
        return draw_moons(n, spec.noise_std, rng);
    });
}

DomainPair gen_gaussian_grid_pair(const DomainPairSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("gaussian_grid: need >= 2 classes");
    return synthetic_pair(spec, spec.num_classes, [&](int n, Rng& rng) {
        return draw_grid(n, spec.num_classes, spec.noise_std, rng);
    });
}

namespace {

uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IdxError(IdxErrorKind::truncated, "idx: truncated header in " + path);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

DomainDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IdxError(IdxErrorKind::truncated, "idx: cannot open " + images_path);
    const uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != 0x00000803u)
        throw IdxError(IdxErrorKind::bad_magic, "idx: bad image magic in " + images_path);
    const uint32_t n = read_be32(img, images_path);
    const uint32_t rows = read_be32(img, images_path);
    const uint32_t cols = read_be32(img, images_path);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IdxError(IdxErrorKind::truncated, "idx: cannot open " + labels_path);
    const uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != 0x00000801u)
        throw IdxError(IdxErrorKind::bad_magic, "idx: bad label magic in " + labels_path);
    const uint32_t n_lab = read_be32(lab, labels_path);
    if (n != n_lab)
        throw IdxError(IdxErrorKind::count_mismatch,
                       "idx: " + std::to_string(n) + " images vs " + std::to_string(n_lab) +
                           " labels");

    const size_t pixels = static_cast<size_t>(rows) * cols;
    Matrix inputs(static_cast<int>(n), static_cast<int>(pixels));
    std::vector<unsigned char> buf(pixels);
    for (uint32_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
            throw IdxError(IdxErrorKind::truncated, "idx: truncated image data in " + images_path);
        for (size_t p = 0; p < pixels; ++p)
            inputs(static_cast<int>(i), static_cast<int>(p)) = buf[p] / 255.0;
    }
    std::vector<int> labels(n);
    for (uint32_t i = 0; i < n; ++i) {
        unsigned char v;
        if (!lab.read(reinterpret_cast<char*>(&v), 1))
            throw IdxError(IdxErrorKind::truncated, "idx: truncated label data in " + labels_path);
        labels[i] = v;
    }
    const int num_classes = labels.empty() ? 1 : *std::max_element(labels.begin(), labels.end()) + 1;
    return DomainDataset(std::move(inputs), DomainTag::source, num_classes,
                         LabelVector(std::move(labels), num_classes));
}

DomainDataset corrupt_to_target(const DomainDataset& source, double noise_std, double invert_prob,
                                Rng& rng) {
    Matrix out = source.inputs();
    for (double v : out.data)
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("corrupt_to_target: inputs must lie in [0,1]");
    for (int i = 0; i < out.rows; ++i) {
        const bool invert = rng.uniform() < invert_prob;
        for (int j = 0; j < out.cols; ++j) {
            double v = out(i, j);
            if (invert) v = 1.0 - v;
            v += noise_std * rng.normal();
            out(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    std::optional<LabelVector> labels;
    if (source.has_labels()) labels = source.eval_labels();
    return DomainDataset(std::move(out), DomainTag::target, source.num_classes(),
                         std::move(labels));
}

namespace {

DomainDataset slice(const DomainDataset& ds, int begin, int count, const std::string& what) {
    if (begin + count > ds.size())
        throw std::invalid_argument("mnist_corrupt: need " + std::to_string(begin + count) +
                                    " samples for " + what + ", file has " +
                                    std::to_string(ds.size()));
    Matrix inputs(count, ds.inputs().cols);
    std::vector<int> labels(count);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < inputs.cols; ++j) inputs(i, j) = ds.inputs()(begin + i, j);
        labels[i] = ds.eval_labels().labels[begin + i];
    }
    return DomainDataset(std::move(inputs), DomainTag::source, ds.num_classes(),
                         LabelVector(std::move(labels), ds.num_classes()));
}

}  // namespace

DomainPair gen_mnist_corrupt_pair(const DomainPairSpec& spec) {
    const DomainDataset train = load_idx(spec.train_images, spec.train_labels);
    const DomainDataset test = load_idx(spec.test_images, spec.test_labels);
    // Disjoint train slices so the target is not a corrupted copy of the
    // very same source images.
    DomainDataset source = slice(train, 0, spec.train_samples, "source");
    DomainDataset target_base = slice(train, spec.train_samples, spec.train_samples, "target");
    DomainDataset test_base = slice(test, 0, spec.test_samples, "target test");

    Rng rng(spec.seed, kCorruptStream);
    DomainDataset target = corrupt_to_target(target_base, spec.noise_std, spec.invert_prob, rng);
    DomainDataset target_test = corrupt_to_target(test_base, spec.noise_std, spec.invert_prob, rng);
    return DomainPair{std::move(source), std::move(target), std::move(target_test)};
}

DomainPair generate_pair(const DomainPairSpec& spec) {
    switch (spec.generator) {
        case GeneratorKind::two_moons: return gen_two_moons_pair(spec);
        case GeneratorKind::gaussian_grid: return gen_gaussian_grid_pair(spec);
        case GeneratorKind::mnist_corrupt: return gen_mnist_corrupt_pair(spec);
    }
    throw std::logic_error("generate_pair: unknown generator");
}

namespace {

// First k elements of a partial Fisher-Yates shuffle over `pool`.
std::vector<int> sample_without_replacement(std::vector<int> pool, int k, Rng& rng) {
    for (int i = 0; i < k; ++i) {
        const int j = i + rng.below(static_cast<int>(pool.size()) - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

Matrix gather_rows(const Matrix& src, const std::vector<int>& idx) {
    Matrix out(static_cast<int>(idx.size()), src.cols);
    for (size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < src.cols; ++j) out(static_cast<int>(i), j) = src(idx[i], j);
    return out;
}

}  // namespace

std::pair<Matrix, LabelVector> stratified_labeled_batch(const DomainDataset& ds, int per_class,
                                                        Rng& rng) {
    const LabelVector& labels = ds.training_labels();
    std::vector<std::vector<int>> by_class(ds.num_classes());
    for (int i = 0; i < labels.size(); ++i) by_class[labels.labels[i]].push_back(i);

    std::vector<int> chosen;
    chosen.reserve(static_cast<size_t>(per_class) * ds.num_classes());
    for (int c = 0; c < ds.num_classes(); ++c) {
        if (static_cast<int>(by_class[c].size()) < per_class)
            throw std::invalid_argument("stratified batch: class " + std::to_string(c) +
                                        " has only " + std::to_string(by_class[c].size()) +
                                        " samples, need " + std::to_string(per_class));
        for (int i : sample_without_replacement(by_class[c], per_class, rng)) chosen.push_back(i);
    }
    // Shuffle so batches are not grouped by class.
    for (int i = static_cast<int>(chosen.size()) - 1; i > 0; --i)
        std::swap(chosen[i], chosen[rng.below(i + 1)]);

    std::vector<int> batch_labels(chosen.size());
    for (size_t i = 0; i < chosen.size(); ++i) batch_labels[i] = labels.labels[chosen[i]];
    return {gather_rows(ds.inputs(), chosen), LabelVector(std::move(batch_labels), ds.num_classes())};
}

Matrix unlabeled_batch(const DomainDataset& ds, int size, Rng& rng) {
    if (size > ds.size())
        throw std::invalid_argument("unlabeled_batch: requested " + std::to_string(size) +
                                    " of " + std::to_string(ds.size()) + " samples");
    std::vector<int> pool(ds.size());
    std::iota(pool.begin(), pool.end(), 0);
    return gather_rows(ds.inputs(), sample_without_replacement(std::move(pool), size, rng));
}

void save_dataset_csv(const std::string& path, const DomainDataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset_csv: cannot open " + path);
    for (int j = 0; j < ds.inputs().cols; ++j) out << "x" << j << ",";
    out << "label,domain\n";
    char buf[48];
    for (int i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.inputs().cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.inputs()(i, j));
            out << buf << ",";
        }
        out << (ds.has_labels() ? ds.eval_labels().labels[i] : -1) << ","
            << (ds.tag() == DomainTag::source ? "source" : "target") << "\n";
    }
    if (!out) throw std::runtime_error("save_dataset_csv: write failed for " + path);
}

DomainDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_dataset_csv: empty file " + path);
    int dim = 0;
    {
        std::istringstream header(line);
        std::string col;
        while (std::getline(header, col, ','))
            if (!col.empty() && col[0] == 'x') ++dim;
    }
    if (dim == 0) throw std::runtime_error("load_dataset_csv: no feature columns in " + path);

    std::vector<double> values;
    std::vector<int> labels;
    DomainTag tag = DomainTag::source;
    int n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        for (int j = 0; j < dim; ++j) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("load_dataset_csv: short row in " + path);
            values.push_back(std::strtod(cell.c_str(), nullptr));
        }
        if (!std::getline(row, cell, ','))
            throw std::runtime_error("load_dataset_csv: missing label in " + path);
        labels.push_back(std::atoi(cell.c_str()));
        if (!std::getline(row, cell))
            throw std::runtime_error("load_dataset_csv: missing domain in " + path);
        tag = cell == "target" ? DomainTag::target : DomainTag::source;
        ++n;
    }
    Matrix inputs(n, dim);
    inputs.data = std::move(values);
    const bool labeled = std::none_of(labels.begin(), labels.end(), [](int v) { return v < 0; });
    const int num_classes =
        labeled && n > 0 ? *std::max_element(labels.begin(), labels.end()) + 1 : 1;
    std::optional<LabelVector> lv;
    if (labeled && n > 0) lv = LabelVector(std::move(labels), num_classes);
    return DomainDataset(std::move(inputs), tag, num_classes, std::move(lv));
}

}  // namespace assocda

#include "assocda/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace assocda {

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::source_only: return "source_only";
        case Regime::target_only: return "target_only";
        case Regime::da_assoc: return "da_assoc";
        case Regime::da_mmd: return "da_mmd";
    }
    return "?";
}

Regime parse_regime(const std::string& name) {
    if (name == "source_only") return Regime::source_only;
    if (name == "target_only") return Regime::target_only;
    if (name == "da_assoc") return Regime::da_assoc;
    if (name == "da_mmd") return Regime::da_mmd;
    throw std::invalid_argument("unknown regime '" + name + "'");
}

void TrainConfig::validate() const {
    if (total_steps < 1) throw std::invalid_argument("TrainConfig: total_steps must be >= 1");
    if (assoc_delay_steps < 0 || assoc_delay_steps > total_steps)
        throw std::invalid_argument("TrainConfig: delay must lie in [0, total_steps]");
    if (!(base_lr > 0.0)) throw std::invalid_argument("TrainConfig: base_lr must be positive");
    if (!(lr_decay_factor > 0.0))
        throw std::invalid_argument("TrainConfig: lr_decay_factor must be positive");
    if (per_class < 1) throw std::invalid_argument("TrainConfig: per_class must be >= 1");
    if (unlabeled_batch_size < 1)
        throw std::invalid_argument("TrainConfig: unlabeled_batch_size must be >= 1");
    if (mmd_weight < 0.0) throw std::invalid_argument("TrainConfig: mmd_weight must be >= 0");
    if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
    assoc.validate();
    mmd.validate();
}

double lr_schedule(int step, const TrainConfig& cfg) {
    const int boundary = (2 * cfg.total_steps + 2) / 3;  // ceil(2T/3)
    return step < boundary ? cfg.base_lr : cfg.base_lr * cfg.lr_decay_factor;
}

double alpha_schedule(int step, const TrainConfig& cfg) {
    return step < cfg.assoc_delay_steps ? 0.0 : cfg.alpha_after_delay;
}

namespace {

constexpr uint64_t kLabeledStream = 11;
constexpr uint64_t kUnlabeledStream = 12;

void check_feasible(const DomainPair& pair, const DomainDataset& labeled, const MlpSpec& spec,
                    const TrainConfig& cfg) {
    if (spec.input_dim != labeled.inputs().cols)
        throw std::invalid_argument("train: model input_dim " + std::to_string(spec.input_dim) +
                                    " != data dim " + std::to_string(labeled.inputs().cols));
    if (spec.num_classes != labeled.num_classes())
        throw std::invalid_argument("train: model num_classes " +
                                    std::to_string(spec.num_classes) + " != data classes " +
                                    std::to_string(labeled.num_classes()));
    std::vector<int> count(labeled.num_classes(), 0);
    for (int v : labeled.training_labels().labels) ++count[v];
    for (int c = 0; c < labeled.num_classes(); ++c)
        if (count[c] < cfg.per_class)
            throw std::invalid_argument("train: class " + std::to_string(c) + " has " +
                                        std::to_string(count[c]) + " samples, per_class is " +
                                        std::to_string(cfg.per_class));
    const bool da = cfg.regime == Regime::da_assoc || cfg.regime == Regime::da_mmd;
    if (da && cfg.unlabeled_batch_size > pair.target.size())
        throw std::invalid_argument("train: unlabeled batch " +
                                    std::to_string(cfg.unlabeled_batch_size) +
                                    " exceeds target size " + std::to_string(pair.target.size()));
}

}  // namespace

RunReport train(const DomainPair& pair, const MlpSpec& mlp_spec, const TrainConfig& cfg) {
    cfg.validate();
    const DomainDataset labeled = cfg.regime == Regime::target_only
                                      ? pair.target.promote_to_labeled_source()
                                      : pair.source;
    check_feasible(pair, labeled, mlp_spec, cfg);

    MlpSpec spec = mlp_spec;
    spec.seed = cfg.seed;
    MlpParams params = init_params(spec);
    OptimizerState opt = OptimizerState::init(params);

    Rng labeled_rng(cfg.seed, kLabeledStream);
    Rng unlabeled_rng(cfg.seed, kUnlabeledStream);

    const bool is_da = cfg.regime == Regime::da_assoc || cfg.regime == Regime::da_mmd;

    RunReport report;
    report.regime = cfg.regime;
    report.seed = cfg.seed;
    report.trace.reserve(cfg.total_steps);

    for (int step = 0; step < cfg.total_steps; ++step) {
        const double lr = lr_schedule(step, cfg);
        const double alpha = alpha_schedule(step, cfg);

        auto [batch_x, batch_y] = stratified_labeled_batch(labeled, cfg.per_class, labeled_rng);
        const ForwardTrace trace = forward(spec, params, batch_x);
        auto [class_loss, grads] = classification_loss_and_grads(spec, trace, params, batch_y);

        double walker = 0.0, visit = 0.0, mmd_val = 0.0, total = class_loss;
        if (is_da) {
            const Matrix target_x =
                unlabeled_batch(pair.target, cfg.unlabeled_batch_size, unlabeled_rng);
            if (cfg.regime == Regime::da_assoc && alpha != 0.0) {
                const ForwardTrace target_trace = forward(spec, params, target_x);
                const AssocResult res = assoc_forward_backward(trace.embeddings,
                                                               target_trace.embeddings, batch_y,
                                                               cfg.assoc);
                walker = res.walker;
                visit = res.visit;
                total += alpha * res.total;
                accumulate(grads, backprop_external(spec, trace, params, res.grad_source), alpha);
                accumulate(grads, backprop_external(spec, target_trace, params, res.grad_target),
                           alpha);
            } else if (cfg.regime == Regime::da_mmd && cfg.mmd_weight != 0.0 &&
                       step >= cfg.assoc_delay_steps) {
                // The MMD term follows the same step-function delay; its
                // magnitude is carried by mmd_weight alone.
                const ForwardTrace target_trace = forward(spec, params, target_x);
                const MmdResult res =
                    mmd2(trace.embeddings.m, target_trace.embeddings.m, cfg.mmd, true);
                mmd_val = res.mmd_squared;
                total += cfg.mmd_weight * mmd_val;
                accumulate(grads, backprop_external(spec, trace, params, *res.grad_source),
                           cfg.mmd_weight);
                accumulate(grads, backprop_external(spec, target_trace, params, *res.grad_target),
                           cfg.mmd_weight);
            }
        }

        report.trace.push_back({step, total, class_loss, walker, visit, mmd_val, lr, alpha});

        std::tie(params, opt) = optimizer_step(params, grads, std::move(opt), lr);

        if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.total_steps) {
            report.evals.push_back(
                {step + 1,
                 error_pct(spec, params, labeled.inputs(), labeled.training_labels()),
                 error_pct(spec, params, pair.target_test.inputs(),
                           pair.target_test.eval_labels())});
        }
    }

    report.final_source_error_pct = report.evals.back().source_error_pct;
    report.final_target_error_pct = report.evals.back().target_error_pct;
    report.labeled_draws = labeled_rng.draws();
    report.unlabeled_draws = unlabeled_rng.draws();

    const EmbeddingBatch emb_src = forward(spec, params, pair.source.inputs()).embeddings;
    const EmbeddingBatch emb_tgt = forward(spec, params, pair.target_test.inputs()).embeddings;
    MmdConfig eval_cfg = cfg.mmd;
    eval_cfg.estimator = MmdEstimator::biased;
    report.final_embedding_mmd = mmd2(emb_src.m, emb_tgt.m, eval_cfg, false).mmd_squared;

    report.spec = spec;
    report.params = std::move(params);
    return report;
}

std::optional<double> coverage(double so_err, double to_err, double da_err) {
    if (std::abs(to_err - so_err) < 1e-9) return std::nullopt;
    return (da_err - so_err) / (to_err - so_err);
}

std::vector<RegimeEmbeddingMmd> embedding_mmd_report(const std::vector<RunReport>& runs,
                                                     const DomainDataset& source,
                                                     const DomainDataset& target_test,
                                                     const MmdConfig& cfg) {
    const RunReport* so = nullptr;
    for (const RunReport& r : runs)
        if (r.regime == Regime::source_only) so = &r;
    if (!so)
        throw std::invalid_argument(
            "embedding_mmd_report: no source_only run to freeze the kernel from");

    // Shared kernel: base bandwidth from the SO embeddings, reused for all
    // regimes so values are comparable.
    const EmbeddingBatch so_src = forward(so->spec, so->params, source.inputs()).embeddings;
    const EmbeddingBatch so_tgt = forward(so->spec, so->params, target_test.inputs()).embeddings;
    MmdConfig frozen = cfg;
    frozen.estimator = MmdEstimator::biased;
    frozen.fixed_bandwidth = median_heuristic(so_src.m, so_tgt.m);

    std::vector<RegimeEmbeddingMmd> table;
    for (const RunReport& r : runs) {
        const EmbeddingBatch es = forward(r.spec, r.params, source.inputs()).embeddings;
        const EmbeddingBatch et = forward(r.spec, r.params, target_test.inputs()).embeddings;
        table.push_back({r.regime, mmd2(es.m, et.m, frozen, false).mmd_squared,
                         r.final_target_error_pct});
    }
    return table;
}

void write_trace_csv(const std::string& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
    out << "step,loss_total,loss_class,loss_walker,loss_visit,loss_mmd,lr,alpha\n";
    char buf[256];
    for (const StepRecord& r : report.trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                      r.total, r.classification, r.walker, r.visit, r.mmd, r.lr, r.alpha);
        out << buf;
    }
    if (!out) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

void write_embeddings_csv(const std::string& path, const MlpSpec& spec, const MlpParams& params,
                          const std::vector<const DomainDataset*>& datasets) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_embeddings_csv: cannot open " + path);
    out << "sample_id,domain,label";
    for (int j = 0; j < spec.embedding_dim; ++j) out << ",e" << j;
    out << "\n";
    char buf[48];
    int id = 0;
    for (const DomainDataset* ds : datasets) {
        const EmbeddingBatch emb = forward(spec, params, ds->inputs()).embeddings;
        for (int i = 0; i < emb.samples(); ++i, ++id) {
            out << id << "," << (ds->tag() == DomainTag::source ? "source" : "target") << ","
                << (ds->has_labels() ? ds->eval_labels().labels[i] : -1);
            for (int j = 0; j < emb.dim(); ++j) {
                std::snprintf(buf, sizeof(buf), ",%.17g", emb.m(i, j));
                out << buf;
            }
            out << "\n";
        }
    }
    if (!out) throw std::runtime_error("write_embeddings_csv: write failed for " + path);
}

void write_embeddings_csv(const std::string& path, const MlpSpec& spec, const MlpParams& params,
                          const DomainDataset& source, const DomainDataset& target_test) {
    write_embeddings_csv(path, spec, params, {&source, &target_test});
}

Matrix load_embeddings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_embeddings_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_embeddings_csv: empty " + path);
    int dim = 0;
    int skip = 0;
    {
        std::istringstream header(line);
        std::string col;
        while (std::getline(header, col, ',')) {
            if (!col.empty() && col[0] == 'e' && col.find_first_not_of("0123456789", 1) ==
                                                     std::string::npos && col.size() > 1)
                ++dim;
            else
                ++skip;
        }
    }
    if (dim == 0) throw std::runtime_error("load_embeddings_csv: no embedding columns in " + path);
    std::vector<double> values;
    int n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        for (int j = 0; j < skip; ++j)
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("load_embeddings_csv: short row in " + path);
        for (int j = 0; j < dim; ++j) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("load_embeddings_csv: short row in " + path);
            values.push_back(std::strtod(cell.c_str(), nullptr));
        }
        ++n;
    }
    Matrix m(n, dim);
    m.data = std::move(values);
    return m;
}

std::string report_json(const std::vector<RunReport>& runs,
                        const std::vector<RegimeEmbeddingMmd>& mmd_table,
                        const std::optional<double>& coverage_da_assoc,
                        const std::optional<double>& coverage_da_mmd,
                        const std::vector<std::pair<std::string, std::string>>& metadata) {
    nlohmann::json j;
    if (!metadata.empty()) {
        nlohmann::json meta;
        for (const auto& [k, v] : metadata) meta[k] = v;
        j["metadata"] = std::move(meta);
    }
    j["runs"] = nlohmann::json::array();
    for (const RunReport& r : runs) {
        nlohmann::json run;
        run["regime"] = regime_name(r.regime);
        run["final_target_error_pct"] = r.final_target_error_pct;
        run["final_source_error_pct"] = r.final_source_error_pct;
        run["final_embedding_mmd"] = r.final_embedding_mmd;
        run["seed"] = r.seed;
        run["steps"] = r.trace.size();
        run["unlabeled_draws"] = r.unlabeled_draws;
        run["evals"] = nlohmann::json::array();
        for (const EvalRecord& e : r.evals)
            run["evals"].push_back({{"step", e.step},
                                    {"source_error_pct", e.source_error_pct},
                                    {"target_error_pct", e.target_error_pct}});
        j["runs"].push_back(std::move(run));
    }
    if (!mmd_table.empty()) {
        j["embedding_mmd_table"] = nlohmann::json::array();
        for (const RegimeEmbeddingMmd& row : mmd_table)
            j["embedding_mmd_table"].push_back({{"regime", regime_name(row.regime)},
                                                {"mmd_squared", row.mmd_squared},
                                                {"target_error_pct", row.target_error_pct}});
    }
    if (coverage_da_assoc)
        j["coverage_da_assoc"] = *coverage_da_assoc;
    else
        j["coverage_da_assoc"] = nullptr;
    if (coverage_da_mmd)
        j["coverage_da_mmd"] = *coverage_da_mmd;
    else
        j["coverage_da_mmd"] = nullptr;
    return j.dump(2) + "\n";
}

}  // namespace assocda

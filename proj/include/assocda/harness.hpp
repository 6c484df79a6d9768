#pragma once

#include <optional>
#include <string>
#include <vector>

#include "assocda/assoc_loss.hpp"
#include "assocda/data.hpp"
#include "assocda/mmd.hpp"
#include "assocda/network.hpp"

namespace assocda {

enum class Regime { source_only, target_only, da_assoc, da_mmd };

std::string regime_name(Regime r);
Regime parse_regime(const std::string& name);

struct TrainConfig {
    int total_steps = 5000;
    double base_lr = 1e-4;
    double lr_decay_factor = 0.33;
    int per_class = 10;
    int unlabeled_batch_size = 100;
    AssocConfig assoc;                // walker 1.0, visit 0.5
    double alpha_after_delay = 1.0;   // association weight once enabled
    int assoc_delay_steps = 500;
    Regime regime = Regime::source_only;
    double mmd_weight = 1.0;
    MmdConfig mmd;                    // per-batch median heuristic by default
    uint64_t seed = 1;
    int eval_every = 500;

    void validate() const;
};

// Base rate until 2/3 of training (ceiling), then base * decay factor.
double lr_schedule(int step, const TrainConfig& cfg);
// 0 before the delay, alpha_after_delay from the delay step onwards.
double alpha_schedule(int step, const TrainConfig& cfg);

struct StepRecord {
    int step;
    double total, classification, walker, visit, mmd, lr, alpha;
};

struct EvalRecord {
    int step;
    double source_error_pct;  // on the labeled training set
    double target_error_pct;  // on the target test set
};

struct RunReport {
    Regime regime = Regime::source_only;
    double final_target_error_pct = 0.0;
    double final_source_error_pct = 0.0;
    std::vector<StepRecord> trace;
    std::vector<EvalRecord> evals;
    double final_embedding_mmd = 0.0;  // biased, own median-heuristic kernel
    uint64_t seed = 0;
    uint64_t labeled_draws = 0;
    uint64_t unlabeled_draws = 0;  // stays 0 for source/target-only regimes
    // Final model, kept for checkpointing and the cross-regime MMD table.
    MlpSpec spec;
    MlpParams params;
};

// Runs the configured regime on the pair. The network seed is taken from
// cfg.seed so one knob controls the whole run; everything is deterministic
// given (pair, mlp_spec, cfg).
RunReport train(const DomainPair& pair, const MlpSpec& mlp_spec, const TrainConfig& cfg);

// (da - so) / (to - so); empty when the SO/TO gap is degenerate.
std::optional<double> coverage(double so_err, double to_err, double da_err);

struct RegimeEmbeddingMmd {
    Regime regime;
    double mmd_squared;
    double target_error_pct;
};

// Biased MMD^2 between source and target-test embeddings per regime, with
// the kernel bandwidth frozen from the source-only run's embeddings so the
// values are comparable across regimes. Throws if no source_only run is
// present.
std::vector<RegimeEmbeddingMmd> embedding_mmd_report(const std::vector<RunReport>& runs,
                                                     const DomainDataset& source,
                                                     const DomainDataset& target_test,
                                                     const MmdConfig& cfg);

// External interfaces: trace CSV, embedding CSV, report JSON.
void write_trace_csv(const std::string& path, const RunReport& report);
void write_embeddings_csv(const std::string& path, const MlpSpec& spec, const MlpParams& params,
                          const std::vector<const DomainDataset*>& datasets);
void write_embeddings_csv(const std::string& path, const MlpSpec& spec, const MlpParams& params,
                          const DomainDataset& source, const DomainDataset& target_test);
// Reads the e0..e{d-1} columns of an embeddings CSV back into a matrix.
Matrix load_embeddings_csv(const std::string& path);
std::string report_json(const std::vector<RunReport>& runs,
                        const std::vector<RegimeEmbeddingMmd>& mmd_table,
                        const std::optional<double>& coverage_da_assoc,
                        const std::optional<double>& coverage_da_mmd,
                        const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace assocda

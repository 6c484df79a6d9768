#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "assocda/config.hpp"
#include "assocda/data.hpp"
#include "assocda/gradcheck.hpp"
#include "assocda/harness.hpp"
#include "assocda/mmd.hpp"
#include "assocda/network.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

int run_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    assocda::ExperimentConfig cfg = assocda::load_config_file(config_path);
    for (const std::string& o : overrides) assocda::apply_override(cfg, o);
    cfg.validate();

    const assocda::DomainPair pair = assocda::generate_pair(cfg.data);
    const assocda::MlpSpec model = cfg.resolved_model(pair);

    std::filesystem::create_directories(cfg.outdir);
    const auto out_path = [&](const std::string& name) { return cfg.outdir + "/" + name; };

    // Datasets are exported so dump-embeddings can be replayed against any
    // checkpoint later.
    assocda::save_dataset_csv(out_path("dataset_source.csv"), pair.source);
    assocda::save_dataset_csv(out_path("dataset_target.csv"), pair.target);
    assocda::save_dataset_csv(out_path("dataset_target_test.csv"), pair.target_test);

    std::vector<assocda::RunReport> runs;
    for (assocda::Regime regime : cfg.regimes()) {
        assocda::TrainConfig tc = cfg.train;
        tc.regime = regime;
        std::printf("training %-12s (steps=%d, seed=%llu)\n",
                    assocda::regime_name(regime).c_str(), tc.total_steps,
                    static_cast<unsigned long long>(tc.seed));
        std::fflush(stdout);
        assocda::RunReport report = assocda::train(pair, model, tc);
        const std::string name = assocda::regime_name(regime);
        assocda::write_trace_csv(out_path("trace_" + name + ".csv"), report);
        assocda::write_embeddings_csv(out_path("embeddings_" + name + ".csv"), report.spec,
                                      report.params, pair.source, pair.target_test);
        assocda::save_checkpoint(out_path("checkpoint_" + name), report.spec, report.params);
        std::printf("  target error %.2f%%  source error %.2f%%  embedding mmd2 %.6g\n",
                    report.final_target_error_pct, report.final_source_error_pct,
                    report.final_embedding_mmd);
        runs.push_back(std::move(report));
    }

    const auto find_err = [&](assocda::Regime r) -> const double* {
        for (const assocda::RunReport& run : runs)
            if (run.regime == r) return &run.final_target_error_pct;
        return nullptr;
    };
    std::optional<double> cov_assoc, cov_mmd;
    const double* so = find_err(assocda::Regime::source_only);
    const double* to = find_err(assocda::Regime::target_only);
    if (so && to) {
        if (const double* da = find_err(assocda::Regime::da_assoc))
            cov_assoc = assocda::coverage(*so, *to, *da);
        if (const double* da = find_err(assocda::Regime::da_mmd))
            cov_mmd = assocda::coverage(*so, *to, *da);
    }
    std::vector<assocda::RegimeEmbeddingMmd> table;
    if (so) {
        assocda::MmdConfig eval_mmd = cfg.train.mmd;
        table = assocda::embedding_mmd_report(runs, pair.source, pair.target_test, eval_mmd);
    }

    write_file(out_path("report.json"),
               assocda::report_json(runs, table, cov_assoc, cov_mmd,
                                    {{"config", config_path},
                                     {"regime", cfg.regime},
                                     {"outdir", cfg.outdir},
                                     {"generator",
                                      cfg.data.generator == assocda::GeneratorKind::two_moons
                                          ? "two_moons"
                                          : cfg.data.generator ==
                                                    assocda::GeneratorKind::gaussian_grid
                                                ? "gaussian_grid"
                                                : "mnist_corrupt"}}));
    if (cov_assoc) std::printf("coverage(da_assoc) = %.4f\n", *cov_assoc);
    if (cov_mmd) std::printf("coverage(da_mmd)   = %.4f\n", *cov_mmd);
    std::printf("report written to %s\n", out_path("report.json").c_str());
    return kExitOk;
}

int run_gradcheck_cmd(uint64_t seed, int instances, bool flip_walker) {
    const assocda::GradcheckReport report =
        assocda::run_gradcheck(seed, instances, flip_walker);
    constexpr double tol = 1e-4;
    for (const assocda::GradcheckEntry& e : report.entries)
        std::printf("%-16s max rel err %.3e  (%s)\n", e.component.c_str(), e.max_rel_err,
                    e.worst_location.c_str());
    for (const assocda::GradcheckEntry& e : report.entries)
        if (!(e.max_rel_err < tol)) {
            std::printf("FAIL: %s at %s: rel err %.3e >= %.0e\n", e.component.c_str(),
                        e.worst_location.c_str(), e.max_rel_err, tol);
            return kExitRuntime;
        }
    std::printf("all gradients match finite differences (tol %.0e, %d instances)\n", tol,
                instances);
    return kExitOk;
}

int run_coverage(double so, double to, double da) {
    const std::optional<double> c = assocda::coverage(so, to, da);
    if (c)
        std::printf("%.4f\n", *c);
    else
        std::printf("undefined\n");
    return kExitOk;
}

int run_dump_embeddings(const std::string& checkpoint, const std::string& dataset,
                        const std::string& out) {
    auto [spec, params] = assocda::load_checkpoint(checkpoint);
    const assocda::DomainDataset ds = assocda::load_dataset_csv(dataset);
    if (ds.inputs().cols != spec.input_dim)
        throw std::runtime_error("dump-embeddings: dataset dim " +
                                 std::to_string(ds.inputs().cols) + " != checkpoint input_dim " +
                                 std::to_string(spec.input_dim));
    assocda::write_embeddings_csv(out, spec, params, {&ds});
    return kExitOk;
}

int run_mmd(const std::string& file_x, const std::string& file_y, double bandwidth,
            bool unbiased) {
    const assocda::Matrix x = assocda::load_embeddings_csv(file_x);
    const assocda::Matrix y = assocda::load_embeddings_csv(file_y);
    assocda::MmdConfig cfg;
    if (bandwidth > 0.0) {
        cfg.use_median_heuristic = false;
        cfg.fixed_bandwidth = bandwidth;
    }
    cfg.estimator = unbiased ? assocda::MmdEstimator::unbiased : assocda::MmdEstimator::biased;
    const assocda::MmdResult res = assocda::mmd2(x, y, cfg, false);
    std::printf("mmd2 = %.10g\n", res.mmd_squared);
    std::printf("bandwidths:");
    for (double b : res.bandwidths_used) std::printf(" %.6g", b);
    std::printf("\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"associative domain adaptation experiments"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "run the configured training regimes");
    std::string config_path;
    std::vector<std::string> overrides;
    train->add_option("config", config_path, "experiment config file")->required();
    train->add_option("--set", overrides, "override a config key (key=value)");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    uint64_t gc_seed = 1;
    int gc_instances = 20;
    bool gc_flip = false;
    gradcheck->add_option("--seed", gc_seed, "base seed");
    gradcheck->add_option("--instances", gc_instances, "random instances per component");
    gradcheck->add_flag("--flip-walker-grad", gc_flip)->group("");  // test hook, hidden

    auto* cover = app.add_subcommand("coverage", "gap coverage from SO/TO/DA errors");
    double so = 0, to = 0, da = 0;
    cover->add_option("so", so, "source-only error")->required();
    cover->add_option("to", to, "target-only error")->required();
    cover->add_option("da", da, "domain-adaptation error")->required();

    auto* dump = app.add_subcommand("dump-embeddings", "embed a dataset with a checkpoint");
    std::string ckpt, dataset_csv, out_csv;
    dump->add_option("checkpoint", ckpt)->required();
    dump->add_option("dataset", dataset_csv)->required();
    dump->add_option("out", out_csv)->required();

    auto* mmd_cmd = app.add_subcommand("mmd", "MMD^2 between two embedding CSV files");
    std::string mmd_x, mmd_y;
    double mmd_bandwidth = 0.0;
    bool mmd_unbiased = false;
    mmd_cmd->add_option("x", mmd_x)->required();
    mmd_cmd->add_option("y", mmd_y)->required();
    mmd_cmd->add_option("--bandwidth", mmd_bandwidth, "fixed base bandwidth (default: median)");
    mmd_cmd->add_flag("--unbiased", mmd_unbiased, "use the unbiased estimator");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*train) return run_train(config_path, overrides);
        if (*gradcheck) {
            if (gc_instances < 1) {
                std::cerr << "gradcheck: --instances must be >= 1\n";
                return kExitUsage;
            }
            return run_gradcheck_cmd(gc_seed, gc_instances, gc_flip);
        }
        if (*cover) return run_coverage(so, to, da);
        if (*dump) return run_dump_embeddings(ckpt, dataset_csv, out_csv);
        if (*mmd_cmd) return run_mmd(mmd_x, mmd_y, mmd_bandwidth, mmd_unbiased);
    } catch (const assocda::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

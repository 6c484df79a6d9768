#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "assocda/harness.hpp"
#include "doctest.h"
#include "test_util.hpp"

using assocda::DomainPair;
using assocda::DomainPairSpec;
using assocda::MlpSpec;
using assocda::Regime;
using assocda::RunReport;
using assocda::TrainConfig;

namespace {

DomainPair small_pair(double rotation = 0.3, double tx = 0.3, int n = 240, uint64_t seed = 7) {
    DomainPairSpec spec;
    spec.rotation = rotation;
    spec.translate_x = tx;
    spec.noise_std = 0.1;
    spec.train_samples = n;
    spec.test_samples = n;
    spec.seed = seed;
    return assocda::gen_two_moons_pair(spec);
}

MlpSpec small_model() {
    MlpSpec m;
    m.input_dim = 2;
    m.hidden_dims = {16};
    m.embedding_dim = 16;
    m.num_classes = 2;
    return m;
}

TrainConfig small_config(Regime regime, int steps = 200) {
    TrainConfig cfg;
    cfg.regime = regime;
    cfg.total_steps = steps;
    cfg.base_lr = 1e-3;
    cfg.per_class = 8;
    cfg.unlabeled_batch_size = 32;
    cfg.assoc_delay_steps = std::min(50, steps / 2);
    cfg.alpha_after_delay = 1.0;
    cfg.eval_every = 100;
    cfg.seed = 4;
    return cfg;
}

}  // namespace

TEST_CASE("lr schedule values") {
    TrainConfig cfg;
    cfg.total_steps = 9000;
    cfg.base_lr = 1e-4;
    cfg.lr_decay_factor = 0.33;
    CHECK(assocda::lr_schedule(0, cfg) == doctest::Approx(1e-4));
    CHECK(assocda::lr_schedule(5999, cfg) == doctest::Approx(1e-4));
    CHECK(assocda::lr_schedule(6000, cfg) == doctest::Approx(3.3e-5));

    cfg.total_steps = 3;
    cfg.base_lr = 0.5;
    CHECK(assocda::lr_schedule(0, cfg) == doctest::Approx(0.5));
    CHECK(assocda::lr_schedule(1, cfg) == doctest::Approx(0.5));
    CHECK(assocda::lr_schedule(2, cfg) == doctest::Approx(0.165));
}

TEST_CASE("alpha schedule values") {
    TrainConfig cfg;
    cfg.assoc_delay_steps = 500;
    cfg.alpha_after_delay = 1.5;
    CHECK(assocda::alpha_schedule(499, cfg) == 0.0);
    CHECK(assocda::alpha_schedule(500, cfg) == doctest::Approx(1.5));
    cfg.assoc_delay_steps = 0;
    CHECK(assocda::alpha_schedule(0, cfg) == doctest::Approx(1.5));
}

TEST_CASE("coverage reproduces the published arithmetic") {
    const auto check_cov = [](double so, double to, double da, double expected_pct) {
        const auto c = assocda::coverage(so, to, da);
        REQUIRE(c.has_value());
        CHECK(std::abs(100.0 * *c - expected_pct) <= 0.01);
    };
    check_cov(35.96, 6.37, 10.53, 85.94);
    check_cov(15.68, 7.09, 8.14, 87.78);
    check_cov(30.71, 0.50, 2.40, 93.71);
    check_cov(4.59, 1.82, 2.34, 81.23);

    CHECK(*assocda::coverage(30.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(*assocda::coverage(30.0, 1.0, 30.0) == doctest::Approx(0.0));
    CHECK(!assocda::coverage(5.0, 5.0, 4.0).has_value());
}

TEST_CASE("source-only trains the source and leaves a gap on a shifted target") {
    const DomainPair pair = small_pair(0.5, 0.4, 300);
    const RunReport report =
        assocda::train(pair, small_model(), small_config(Regime::source_only, 2000));
    CHECK(report.final_source_error_pct < 2.0);
    CHECK(report.final_target_error_pct > 5.0);
    CHECK(report.final_source_error_pct >= 0.0);
    CHECK(report.final_target_error_pct <= 100.0);
    CHECK(report.trace.size() == 2000);
    CHECK(report.evals.size() == 20);
}

TEST_CASE("target-only reaches a low target error") {
    const DomainPair pair = small_pair(0.3, 0.3, 400);
    MlpSpec model = small_model();
    model.hidden_dims = {32};
    model.embedding_dim = 32;
    const RunReport report =
        assocda::train(pair, model, small_config(Regime::target_only, 3000));
    CHECK(report.final_target_error_pct < 3.0);
    CHECK(report.unlabeled_draws == 0);
}

TEST_CASE("training is deterministic given config and datasets") {
    const DomainPair pair = small_pair();
    const TrainConfig cfg = small_config(Regime::da_assoc, 120);
    const RunReport a = assocda::train(pair, small_model(), cfg);
    const RunReport b = assocda::train(pair, small_model(), cfg);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].total == b.trace[i].total);
        CHECK(a.trace[i].classification == b.trace[i].classification);
        CHECK(a.trace[i].walker == b.trace[i].walker);
        CHECK(a.trace[i].visit == b.trace[i].visit);
        CHECK(a.trace[i].mmd == b.trace[i].mmd);
    }
    CHECK(a.final_target_error_pct == b.final_target_error_pct);
    CHECK(a.final_embedding_mmd == b.final_embedding_mmd);
}

TEST_CASE("logged totals satisfy the composite objective identity") {
    const DomainPair pair = small_pair();

    const RunReport assoc =
        assocda::train(pair, small_model(), small_config(Regime::da_assoc, 150));
    const TrainConfig acfg = small_config(Regime::da_assoc, 150);
    for (const auto& r : assoc.trace) {
        const double alpha = assocda::alpha_schedule(r.step, acfg);
        const double expected =
            r.classification +
            alpha * (acfg.assoc.walker_weight * r.walker + acfg.assoc.visit_weight * r.visit);
        CHECK(std::abs(r.total - expected) < 1e-10);
        CHECK(r.lr == assocda::lr_schedule(r.step, acfg));
        CHECK(r.alpha == alpha);
        if (r.step < acfg.assoc_delay_steps) {
            CHECK(r.walker == 0.0);
            CHECK(r.visit == 0.0);
        }
    }

    const RunReport mmd = assocda::train(pair, small_model(), small_config(Regime::da_mmd, 150));
    const TrainConfig mcfg = small_config(Regime::da_mmd, 150);
    for (const auto& r : mmd.trace) {
        CHECK(std::abs(r.total - (r.classification + mcfg.mmd_weight * r.mmd)) < 1e-10);
        CHECK(r.walker == 0.0);
        CHECK(r.visit == 0.0);
    }
}

TEST_CASE("source-only never touches the unlabeled target stream") {
    const DomainPair pair = small_pair();
    const RunReport so = assocda::train(pair, small_model(), small_config(Regime::source_only, 80));
    CHECK(so.unlabeled_draws == 0);
    const RunReport da = assocda::train(pair, small_model(), small_config(Regime::da_assoc, 80));
    CHECK(da.unlabeled_draws > 0);
}

TEST_CASE("alpha collapse: da_assoc with zero alpha matches source_only stepwise") {
    const DomainPair pair = small_pair();
    TrainConfig so_cfg = small_config(Regime::source_only, 150);
    so_cfg.alpha_after_delay = 0.0;
    TrainConfig da_cfg = small_config(Regime::da_assoc, 150);
    da_cfg.alpha_after_delay = 0.0;

    const RunReport so = assocda::train(pair, small_model(), so_cfg);
    const RunReport da = assocda::train(pair, small_model(), da_cfg);
    REQUIRE(so.trace.size() == da.trace.size());
    for (size_t i = 0; i < so.trace.size(); ++i) {
        CHECK(std::abs(so.trace[i].total - da.trace[i].total) <= 1e-12);
        CHECK(std::abs(so.trace[i].classification - da.trace[i].classification) <= 1e-12);
        CHECK(so.trace[i].walker == da.trace[i].walker);
        CHECK(so.trace[i].visit == da.trace[i].visit);
        CHECK(so.trace[i].alpha == da.trace[i].alpha);
    }
    CHECK(so.final_target_error_pct == da.final_target_error_pct);
}

TEST_CASE("train validates configuration before starting") {
    const DomainPair pair = small_pair();
    TrainConfig cfg = small_config(Regime::da_assoc);
    cfg.per_class = 1000;  // more than any class has
    CHECK_THROWS_AS(assocda::train(pair, small_model(), cfg), std::invalid_argument);

    cfg = small_config(Regime::da_mmd);
    cfg.unlabeled_batch_size = pair.target.size() + 1;
    CHECK_THROWS_AS(assocda::train(pair, small_model(), cfg), std::invalid_argument);

    cfg = small_config(Regime::source_only);
    cfg.assoc_delay_steps = cfg.total_steps + 1;
    CHECK_THROWS_AS(assocda::train(pair, small_model(), cfg), std::invalid_argument);

    MlpSpec wrong = small_model();
    wrong.input_dim = 3;
    CHECK_THROWS_AS(assocda::train(pair, wrong, small_config(Regime::source_only)),
                    std::invalid_argument);

    MlpSpec wrong_classes = small_model();
    wrong_classes.num_classes = 5;
    CHECK_THROWS_AS(assocda::train(pair, wrong_classes, small_config(Regime::source_only)),
                    std::invalid_argument);
}

TEST_CASE("embedding mmd report uses a shared kernel and requires a source-only run") {
    const DomainPair pair = small_pair();
    const RunReport so = assocda::train(pair, small_model(), small_config(Regime::source_only, 100));

    std::vector<RunReport> runs;
    runs.push_back(so);
    runs.push_back(so);  // the same regime twice must yield identical rows
    const auto table =
        assocda::embedding_mmd_report(runs, pair.source, pair.target_test, assocda::MmdConfig{});
    REQUIRE(table.size() == 2);
    CHECK(table[0].mmd_squared == table[1].mmd_squared);
    CHECK(table[0].target_error_pct == table[1].target_error_pct);

    std::vector<RunReport> no_so;
    no_so.push_back(assocda::train(pair, small_model(), small_config(Regime::target_only, 100)));
    CHECK_THROWS_AS(
        assocda::embedding_mmd_report(no_so, pair.source, pair.target_test, assocda::MmdConfig{}),
        std::invalid_argument);
}

TEST_CASE("trace csv layout") {
    const DomainPair pair = small_pair();
    const RunReport r = assocda::train(pair, small_model(), small_config(Regime::source_only, 10));
    const std::string path =
        (std::filesystem::temp_directory_path() / "assocda_trace.csv").string();
    assocda::write_trace_csv(path, r);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,loss_total,loss_class,loss_walker,loss_visit,loss_mmd,lr,alpha");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 10);
    std::filesystem::remove(path);
}

TEST_CASE("embeddings csv roundtrip through the reader") {
    const DomainPair pair = small_pair(0.3, 0.3, 40);
    const RunReport r = assocda::train(pair, small_model(), small_config(Regime::source_only, 5));
    const std::string path =
        (std::filesystem::temp_directory_path() / "assocda_emb.csv").string();
    assocda::write_embeddings_csv(path, r.spec, r.params, pair.source, pair.target_test);
    const assocda::Matrix emb = assocda::load_embeddings_csv(path);
    CHECK(emb.rows == pair.source.size() + pair.target_test.size());
    CHECK(emb.cols == r.spec.embedding_dim);
    const assocda::Matrix direct =
        assocda::forward(r.spec, r.params, pair.source.inputs()).embeddings.m;
    for (int j = 0; j < emb.cols; ++j)
        CHECK(emb(0, j) == doctest::Approx(direct(0, j)).epsilon(1e-15));
    std::filesystem::remove(path);
}

TEST_CASE("association training handles a multi-class gaussian grid") {
    DomainPairSpec spec;
    spec.generator = assocda::GeneratorKind::gaussian_grid;
    spec.num_classes = 4;
    spec.rotation = 0.2;
    spec.translate_x = 0.2;
    spec.noise_std = 0.25;
    spec.train_samples = 400;
    spec.test_samples = 200;
    spec.seed = 5;
    const DomainPair pair = assocda::generate_pair(spec);

    MlpSpec model;
    model.input_dim = 2;
    model.hidden_dims = {32};
    model.embedding_dim = 32;
    model.num_classes = 4;

    TrainConfig cfg;
    cfg.regime = Regime::da_assoc;
    cfg.total_steps = 800;
    cfg.base_lr = 1e-3;
    cfg.per_class = 5;
    cfg.unlabeled_batch_size = 40;
    cfg.assoc_delay_steps = 100;
    cfg.alpha_after_delay = 1.0;
    cfg.eval_every = 400;
    cfg.seed = 2;

    const RunReport report = assocda::train(pair, model, cfg);
    CHECK(report.final_target_error_pct < 15.0);
    // Walker loss engages after the delay and respects its lower bound,
    // ln(per_class) for four balanced classes of five.
    bool saw_walker = false;
    for (const auto& r : report.trace)
        if (r.step >= cfg.assoc_delay_steps && r.walker > 0.0) {
            saw_walker = true;
            CHECK(r.walker >= std::log(5.0) - 1e-9);
        }
    CHECK(saw_walker);
}

TEST_CASE("regime names round trip") {
    for (Regime r : {Regime::source_only, Regime::target_only, Regime::da_assoc, Regime::da_mmd})
        CHECK(assocda::parse_regime(assocda::regime_name(r)) == r);
    CHECK_THROWS_AS(assocda::parse_regime("bogus"), std::invalid_argument);
}

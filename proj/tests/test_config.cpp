#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "assocda/config.hpp"
#include "doctest.h"

using assocda::ConfigError;
using assocda::ExperimentConfig;

namespace {

std::string write_cfg(const std::string& body) {
    const std::string path =
        (std::filesystem::temp_directory_path() / "assocda_test.cfg").string();
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("parses keys, comments and dotted sections") {
    const std::string path = write_cfg(
        "# a comment\n"
        "outdir = /tmp/x   # trailing comment\n"
        "\n"
        "regime = da_assoc\n"
        "seed = 9\n"
        "data.rotation = 0.25\n"
        "data.train_samples = 123\n"
        "model.hidden_dims = 8,4\n"
        "model.activation = tanh\n"
        "train.base_lr = 5e-4\n"
        "assoc.visit_weight = 0.25\n"
        "mmd.bandwidth_multipliers = 1,2\n"
        "mmd.use_median_heuristic = false\n"
        "mmd.fixed_bandwidth = 1.5\n");
    const ExperimentConfig cfg = assocda::load_config_file(path);
    CHECK(cfg.outdir == "/tmp/x");
    CHECK(cfg.regime == "da_assoc");
    CHECK(cfg.train.seed == 9);
    CHECK(cfg.data.rotation == doctest::Approx(0.25));
    CHECK(cfg.data.train_samples == 123);
    CHECK(cfg.model.hidden_dims == std::vector<int>{8, 4});
    CHECK(cfg.model.activation == assocda::Activation::tanh);
    CHECK(cfg.train.base_lr == doctest::Approx(5e-4));
    CHECK(cfg.train.assoc.visit_weight == doctest::Approx(0.25));
    CHECK(cfg.train.mmd.bandwidth_multipliers == std::vector<double>{1.0, 2.0});
    CHECK(!cfg.train.mmd.use_median_heuristic);
    CHECK(cfg.train.mmd.fixed_bandwidth.has_value());
    cfg.validate();
    CHECK(cfg.regimes().size() == 1);
    std::filesystem::remove(path);
}

TEST_CASE("defaults cover all four regimes") {
    const ExperimentConfig cfg;
    cfg.validate();
    CHECK(cfg.regime == "all");
    CHECK(cfg.regimes().size() == 4);
    CHECK(cfg.train.assoc.visit_weight == doctest::Approx(0.5));
    CHECK(cfg.train.assoc_delay_steps == 500);
    CHECK(cfg.train.per_class == 10);
    CHECK(cfg.train.unlabeled_batch_size == 100);
    CHECK(cfg.train.total_steps == 5000);
}

TEST_CASE("unknown keys and malformed lines are rejected") {
    const std::string bad_key = write_cfg("no_such_key = 1\n");
    CHECK_THROWS_AS(assocda::load_config_file(bad_key), ConfigError);

    const std::string bad_line = write_cfg("just some words\n");
    CHECK_THROWS_AS(assocda::load_config_file(bad_line), ConfigError);

    const std::string bad_value = write_cfg("train.base_lr = fast\n");
    CHECK_THROWS_AS(assocda::load_config_file(bad_value), ConfigError);

    const std::string bad_generator = write_cfg("data.generator = spiral\n");
    CHECK_THROWS_AS(assocda::load_config_file(bad_generator), ConfigError);

    CHECK_THROWS_AS(assocda::load_config_file("/nonexistent.cfg"), ConfigError);
    std::filesystem::remove(bad_key);
}

TEST_CASE("overrides are applied after the file") {
    const std::string path = write_cfg("seed = 1\ntrain.total_steps = 100\n");
    ExperimentConfig cfg = assocda::load_config_file(path);
    assocda::apply_override(cfg, "train.total_steps=42");
    assocda::apply_override(cfg, "regime=source_only");
    CHECK(cfg.train.total_steps == 42);
    CHECK(cfg.regime == "source_only");
    CHECK_THROWS_AS(assocda::apply_override(cfg, "nonsense"), ConfigError);
    CHECK_THROWS_AS(assocda::apply_override(cfg, "bad.key=1"), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("validation rejects inconsistent values") {
    ExperimentConfig cfg;
    cfg.regime = "sideways";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ExperimentConfig{};
    cfg.train.total_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ExperimentConfig{};
    cfg.train.assoc_delay_steps = cfg.train.total_steps + 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ExperimentConfig{};
    cfg.data.invert_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ExperimentConfig{};
    cfg.outdir = "";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ExperimentConfig{};
    cfg.data.rotation = 2.0;  // beyond pi/2
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ExperimentConfig{};
    cfg.data.generator = assocda::GeneratorKind::mnist_corrupt;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // missing IDX paths
}

TEST_CASE("resolved model adopts the pair geometry") {
    ExperimentConfig cfg;
    cfg.data.train_samples = 40;
    cfg.data.test_samples = 40;
    const assocda::DomainPair pair = assocda::generate_pair(cfg.data);
    const assocda::MlpSpec model = cfg.resolved_model(pair);
    CHECK(model.input_dim == 2);
    CHECK(model.num_classes == 2);
}

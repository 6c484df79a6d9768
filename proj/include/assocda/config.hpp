#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "assocda/data.hpp"
#include "assocda/harness.hpp"
#include "assocda/network.hpp"

namespace assocda {

// Raised for malformed files, unknown keys or invalid values; the CLI maps
// it to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// One flat experiment description: dataset pair, model, training setup and
// output location. `regime` may be a single regime name or "all".
struct ExperimentConfig {
    std::string outdir = "out";
    std::string regime = "all";
    DomainPairSpec data;
    MlpSpec model;
    TrainConfig train;

    ExperimentConfig();

    std::vector<Regime> regimes() const;
    // Model spec with input_dim/num_classes resolved against the pair.
    MlpSpec resolved_model(const DomainPair& pair) const;
    void validate() const;
};

// `key = value` per line, `#` starts a comment, dotted keys select the
// nested section. Unknown keys are rejected.
ExperimentConfig load_config_file(const std::string& path);

// Applies one `key=value` override (the CLI `--set` flag).
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

}  // namespace assocda

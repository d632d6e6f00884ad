#pragma once

#include <string>

#include "hpred/config.hpp"

namespace hpred::app {

/// Command-line overrides applied on top of the loaded config.
struct Overrides {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<double> force_ratio;
  bool pure_learned = false;
};

/// Default config, then the config file, then the flags. Throws ConfigError.
RunConfig resolve_config(const Overrides& overrides);

void gen_data(const RunConfig& config);
void train_cvae(const RunConfig& config);
void train_irl(const RunConfig& config);
void predict(const RunConfig& config);
void sweep(const RunConfig& config);
void corner_cases(const RunConfig& config);

}  // namespace hpred::app

// hpred: command-line front end for data generation, training, prediction
// and the ratio sweep.

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "commands.hpp"
#include "hpred/error.hpp"

namespace {

int report(hpred::ErrorCode code, const std::string& message) {
  std::fprintf(stderr, "error: %s: %s\n", std::string(hpred::category_name(code)).c_str(),
               message.c_str());
  const bool missing =
      code == hpred::ErrorCode::ModelNotFound || code == hpred::ErrorCode::InputNotFound;
  return missing ? 2 : 1;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hpred");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PREDICTOR_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only "off" itself should do that
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Hybrid learning/planning trajectory prediction"};
  app.require_subcommand(1);

  hpred::app::Overrides overrides;
  std::uint64_t seed = 0;
  std::string out;
  double force_ratio = 0.0;
  const auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", overrides.config_file, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Seed for data, training and sampling");
    cmd->add_option("--out", out, "Output directory");
  };
  const auto ratio_flags = [&](CLI::App* cmd) {
    cmd->add_option("--force-ratio", force_ratio, "Fix the weight ratio r")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--pure-learned", overrides.pure_learned, "Learned sampler only (r = 0)");
  };

  using Command = void (*)(const hpred::RunConfig&);
  const std::pair<const char*, Command> commands[] = {
      {"gen-data", hpred::app::gen_data},       {"train-cvae", hpred::app::train_cvae},
      {"train-irl", hpred::app::train_irl},     {"predict", hpred::app::predict},
      {"sweep", hpred::app::sweep},             {"corner-cases", hpred::app::corner_cases},
  };
  const char* help[] = {"Generate the synthetic dataset",
                        "Train the CVAE sampler",
                        "Learn cost weights from rational demonstrations",
                        "Run one prediction cycle per scene",
                        "Collision rate against the weight ratio",
                        "Collision rates on the four corner-case scenes"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    common(sub);
    if (i >= 3) ratio_flags(sub);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(hpred::ErrorCode::InvalidArgument, e.what());
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      auto* sub = subs[i];
      if (!sub->parsed()) continue;
      if (sub->count("--seed")) overrides.seed = seed;
      if (sub->count("--out")) overrides.output_dir = out;
      if (sub->get_option_no_throw("--force-ratio") && sub->count("--force-ratio")) {
        overrides.force_ratio = force_ratio;
      }
      const auto config = hpred::app::resolve_config(overrides);
      commands[i].second(config);
    }
  } catch (const hpred::Error& e) {
    return report(e.code(), e.what());
  } catch (const std::exception& e) {
    return report(hpred::ErrorCode::IoError, e.what());
  }
  return 0;
}

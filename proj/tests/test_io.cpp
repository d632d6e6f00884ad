#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hpred/config.hpp"
#include "hpred/error.hpp"
#include "hpred/manifest.hpp"
#include "hpred/svg.hpp"

using namespace hpred;
using nlohmann::json;

namespace {

ErrorCode code_of(const json& j) {
  try {
    validate(config_from_json(j));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("config defaults and round trip") {
  const auto def = config_from_json(json::object());
  CHECK(def.seed == 1);
  CHECK(def.pipeline.threshold == 0.2);
  CHECK(def.hybrid_ratio == 1.5);
  validate(def);
  const auto j = to_json(def);
  CHECK(to_json(config_from_json(j)) == j);

  const auto c = config_from_json(json::parse(R"({"seed": 9, "cvae": {"epochs": 3},
      "pipeline": {"forced_ratio": 0.5, "discrepancy": "trajectory_rmse"},
      "sweep": {"ratios": [0, 1]}})"));
  CHECK(c.seed == 9);
  CHECK(c.training.epochs == 3);
  CHECK(c.pipeline.forced_ratio == 0.5);
  CHECK(c.pipeline.discrepancy == pipeline::Discrepancy::FullTrajectoryRmse);
  CHECK(c.sweep_ratios == std::vector<double>{0, 1});
  CHECK(to_json(config_from_json(to_json(c))) == to_json(c));

  const auto p = c.resolved_pipeline();
  CHECK(p.planner.horizon == c.shape.future_states);
}

TEST_CASE("config rejects unknown keys and bad values") {
  try {
    config_from_json(json::parse(R"({"cvae": {"epoch": 3}})"));
    FAIL("accepted unknown key");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("cvae.epoch") != std::string::npos);
  }
  CHECK(code_of(json::parse(R"({"bogus": 1})")) == ErrorCode::ConfigError);
  CHECK(code_of(json::parse(R"({"pipeline": {"threshold": -1}})")) == ErrorCode::ConfigError);
  CHECK(code_of(json::parse(R"({"sweep": {"ratios": [1, 0.5]}})")) == ErrorCode::ConfigError);
  CHECK(code_of(json::parse(R"({"sweep": {"ego_speed": 5}})")) == ErrorCode::ConfigError);
  CHECK(code_of(json::parse(R"({"seed": "one"})")) == ErrorCode::ConfigError);
}

TEST_CASE("git blob hashes") {
  CHECK(manifest::git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  // printf 'hello\n' | git hash-object --stdin
  CHECK(manifest::git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK_THROWS_AS(manifest::file_hash("/nonexistent/file"), Error);

  const auto dir = std::filesystem::temp_directory_path() / "hpred_io_test";
  std::filesystem::create_directories(dir);
  const auto f = dir / "a.txt";
  std::ofstream(f) << "hello\n";
  CHECK(manifest::file_hash(f) == "ce013625030ba8dba906f756967f9e9ca394464a");
  manifest::RunManifest m;
  m.command = "sweep";
  m.seed = 4;
  m.add_output(f);
  const auto j = m.to_json();
  CHECK(j.dump() == m.to_json().dump());
  CHECK(j.dump().find("ce013625") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("svg output") {
  CHECK(svg::escape("a<b & \"c\">") == "a&lt;b &amp; &quot;c&quot;&gt;");
  svg::Series s{"rate", {0, 1, 2}, {0.7, 0.4, 0.2}, {0.1, 0.05, 0.02}};
  const auto chart = svg::line_chart({s}, {"Sweep", "r", "rate <%>"});
  CHECK(chart.starts_with("<svg"));
  CHECK(chart.find("rate &lt;%&gt;") != std::string::npos);
  CHECK(chart == svg::line_chart({s}, {"Sweep", "r", "rate <%>"}));
  s.y.pop_back();
  CHECK_THROWS_AS(svg::line_chart({s}, {}), Error);

  const std::vector<ReferencePath> paths{ReferencePath("p", {{0, 0}, {10, 0}})};
  svg::TrajectoryPanel panel{"raw", {{{0, 0}, {5, 0}}}, {{{1, 1}, {2, 1}}}, 0.25};
  const auto fig = svg::trajectory_panels(paths, {panel, panel}, "scene");
  CHECK(fig.find("raw") != std::string::npos);
  CHECK(fig.find("0.25") != std::string::npos);
}

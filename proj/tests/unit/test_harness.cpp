#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "hedgefair/dataset_io.hpp"
#include "hedgefair/serialization.hpp"

using namespace hedgefair;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hedgefair_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_config(std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.steps = 600;
  cfg.history_size = 800;
  cfg.audit.window = 200;
  cfg.audit.cadence = 100;
  cfg.metrics_window = 100;
  return cfg;
}

RunConfig fixture_config() {
  RunConfig cfg;
  cfg.source = DataSource::fixture;
  cfg.steps = 4;
  cfg.history_size = 0;
  cfg.eta = 0.5;
  cfg.portfolio = {{"reference", FunctionKind::fixed_rule, "school <= 15", 1e-3}};
  return cfg;
}

const RunReport& small_report() {
  static const RunReport report = run(small_config());
  return report;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("fixture run chains the update rule") {
  const auto r = run(fixture_config());
  REQUIRE(r.steps.size() == 4);
  CHECK(r.framework_loss == doctest::Approx(2.25).epsilon(1e-12));
  REQUIRE(r.final_portfolio.size() == 1);
  CHECK(std::abs(r.final_portfolio[0].weight - 0.2109375) < 1e-9);
  CHECK(r.regret == 0.0);
  CHECK(r.events.empty());
  CHECK_FALSE(r.truncated);
}

TEST_CASE("exhausted data truncates the run") {
  auto cfg = fixture_config();
  cfg.steps = 10;
  const auto r = run(cfg);
  CHECK(r.truncated);
  CHECK(r.steps.size() == 4);
  REQUIRE_FALSE(r.events.empty());
  CHECK(r.events.back().type == "truncated");
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  cfg.steps = 0;
  CHECK_THROWS_AS(run(cfg), ValidationError);
  cfg = small_config();
  cfg.eta = 0.75;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.portfolio.push_back(cfg.portfolio.front());
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.source = DataSource::csv;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  CHECK_THROWS_AS(run_config_from_json(json{{"stepz", 5}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(json{{"audit", {{"cadense", 5}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(json{{"scenario", {{"seed", 5}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(json{{"steps", "many"}}), ValidationError);
  const auto parsed = run_config_from_json(json{{"steps", 5}, {"selector", {{"eta", 0.1}}}});
  CHECK(parsed.steps == 5);
  CHECK(parsed.eta == 0.1);
  CHECK(parsed.portfolio.size() == 4);
}

TEST_CASE("config round trip") {
  auto cfg = small_config(9);
  cfg.scenario.beta_latent = 1.5;
  cfg.enhancement.c_scale = 0.02;
  cfg.reveal_delay = 3;
  const json j = to_json(cfg);
  CHECK(to_json(run_config_from_json(j)) == j);
}

TEST_CASE("step records are consistent") {
  const auto& r = small_report();
  REQUIRE(r.steps.size() == 600);
  double loss_sum = 0.0;
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    const auto& s = r.steps[k];
    CHECK(s.step == k + 1);
    const auto& sel = s.selection;
    CHECK(sel.function_ids.size() == sel.labels.size());
    CHECK(sel.function_ids.size() == sel.probabilities.size());
    CHECK(sel.function_ids.size() >= 1);
    CHECK(sel.function_ids.size() <= 4);
    CHECK(std::abs(std::accumulate(sel.probabilities.begin(), sel.probabilities.end(), 0.0) - 1.0) <
          1e-12);
    REQUIRE(sel.label_of(sel.chosen).has_value());
    CHECK(*sel.label_of(sel.chosen) == sel.emitted);
    REQUIRE(s.revealed_loss.has_value());
    loss_sum += *s.revealed_loss;
  }
  CHECK(loss_sum == doctest::Approx(r.framework_loss).epsilon(1e-9));
  CHECK(r.series.framework_loss.back() == r.framework_loss);
  CHECK(r.series.regret.back() == r.regret);
  CHECK_FALSE(r.final_portfolio.empty());
}

TEST_CASE("series lengths") {
  const auto& r = small_report();
  CHECK(r.series.framework_loss.size() == 600);
  CHECK(r.series.regret.size() == 600);
  CHECK(r.series.rolling_accuracy.size() == 600);
  REQUIRE(r.gap_columns.size() == 2);
  CHECK(r.gap_columns[0] == std::pair<std::string, std::string>{"gender", "gap_gender"});
  CHECK(r.gap_columns[1] == std::pair<std::string, std::string>{"zip", "gap_zipgroup"});
  for (const auto& [attr, col] : r.gap_columns) CHECK(r.series.gaps.at(attr).size() == 600);
  // Gap at the last step equals a direct count over the trailing window.
  const double direct = emitted_gap(r, "gender", 500, 600, r.config.audit.min_support);
  CHECK(r.series.gaps.at("gender").back() == doctest::Approx(direct));
}

TEST_CASE("every prune is followed by one enhancement") {
  const auto& r = small_report();
  bool gender_pruned = false;
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    const auto& e = r.events[k];
    if (e.type != "prune") continue;
    if (e.function_id == "gender_rule") {
      gender_pruned = true;
      CHECK(e.step < 1000);
    }
    REQUIRE(k + 1 < r.events.size());
    const auto& next = r.events[k + 1];
    CHECK(next.type == "enhancement");
    CHECK(next.function_id == e.function_id);
    const auto n = std::count_if(r.events.begin(), r.events.end(), [&](const RunEvent& x) {
      return x.type == "enhancement" && x.function_id == e.function_id && x.step == e.step;
    });
    CHECK(n == 1);
    const bool reinserted = k + 2 < r.events.size() && r.events[k + 2].type == "reinsert" &&
                            r.events[k + 2].function_id == e.function_id;
    const bool retired =
        std::find(r.retired.begin(), r.retired.end(), e.function_id) != r.retired.end();
    CHECK(reinserted != retired);
  }
  CHECK(gender_pruned);
  const auto n_enh = std::count_if(r.events.begin(), r.events.end(),
                                   [](const RunEvent& x) { return x.type == "enhancement"; });
  const auto n_prune = std::count_if(r.events.begin(), r.events.end(),
                                     [](const RunEvent& x) { return x.type == "prune"; });
  CHECK(n_enh == n_prune);
}

TEST_CASE("disabled enhancement keeps unfair members") {
  auto cfg = small_config();
  cfg.enhancement.enabled = false;
  const auto r = run(cfg);
  for (const auto& e : r.events) {
    if (e.type == "prune") CHECK(e.detail.at("reason") == "low_weight");
    if (e.type == "enhancement") CHECK(e.detail.at("status") == "failed");
  }
  const auto audited_unfair = std::any_of(r.events.begin(), r.events.end(), [](const RunEvent& e) {
    return e.type == "audit" && e.function_id == "gender_rule" && e.detail.at("unfair") == true;
  });
  CHECK(audited_unfair);
}

TEST_CASE("reveal delay") {
  auto cfg = small_config();
  cfg.steps = 200;
  cfg.reveal_delay = 5;
  const auto r = run(cfg);
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    CHECK(r.steps[k].desired.has_value() == (k + 5 < r.steps.size()));
  }
  CHECK(std::isnan(r.series.rolling_accuracy[4]));
  CHECK_FALSE(std::isnan(r.series.rolling_accuracy[5]));
}

TEST_CASE("outputs") {
  const auto dir = scratch("outputs");
  write_run_outputs(small_report(), dir);
  CHECK(count_lines(dir / "metrics.csv") == 601);
  std::ifstream in(dir / "metrics.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,framework_loss,regret,rolling_accuracy,gap_gender,gap_zipgroup");
  const auto events = json::parse(read_text_file(dir / "events.json"));
  CHECK(events.size() == small_report().events.size());
  CHECK(json::parse(read_text_file(dir / "report.json")).contains("steps"));

  const auto empty_dir = scratch("empty_events");
  metrics_export(run(fixture_config()), empty_dir);
  CHECK(json::parse(read_text_file(empty_dir / "events.json")) == json::array());
  CHECK(count_lines(empty_dir / "metrics.csv") == 5);
}

TEST_CASE("csv source") {
  const auto dir = scratch("csv_source");
  hiring::ScenarioConfig sc;
  sc.population = 700;
  sc.seed = 4;
  const auto pop = hiring::generate_population(sc);
  write_dataset_csv(pop.truth, dir / "data.csv");
  RunConfig cfg;
  cfg.source = DataSource::csv;
  cfg.dataset_path = (dir / "data.csv").string();
  cfg.history_size = 400;
  cfg.steps = 300;
  cfg.audit.window = 100;
  const auto r = run(cfg);
  CHECK(r.steps.size() == 300);
  CHECK(r.steps.front().selection.instance_id == pop.truth.instances[400].id);
}

TEST_CASE("replay is identical and detects tampering") {
  const json stored = to_json(small_report());
  const auto again = replay(stored);
  CHECK(to_json(again, true) == to_json(small_report(), true));

  const auto dir = scratch("replay");
  write_run_outputs(small_report(), dir);
  CHECK_NOTHROW(replay(dir / "report.json"));

  json seed_tampered = stored;
  seed_tampered["config"]["seed"] = 2;
  try {
    replay(seed_tampered);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 1);
  }

  json step_tampered = stored;
  step_tampered["steps"][41]["draw"] = 0.123;
  try {
    replay(step_tampered);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 42);
  }

  json summary_tampered = stored;
  summary_tampered["framework_loss"] = 0.0;
  CHECK_THROWS_AS(replay(summary_tampered), DivergenceError);

  CHECK_THROWS_AS(replay(json::object()), ValidationError);
}

}  // TEST_SUITE

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hedgefair/enhancer.hpp"
#include "hedgefair/fairness_auditor.hpp"
#include "hedgefair/hiring_scenario.hpp"
#include "hedgefair/mwu_selector.hpp"

namespace hedgefair {

/// How to build one portfolio member. Learned kinds are trained on the run's
/// history rows.
struct FunctionSpec {
  std::string id;
  FunctionKind kind = FunctionKind::fixed_rule;
  std::string rule;  // fixed_rule only
  double reg = 1e-3;
};

std::vector<FunctionSpec> default_portfolio_specs();

/// Builds a function from its spec; learned kinds need a nonempty history.
DecisionFunction build_function(const FunctionSpec& spec, const SchemaPtr& schema,
                                const Dataset& history);

enum class DataSource { scenario, csv, fixture };

const char* to_string(DataSource s);
DataSource data_source_from_string(const std::string& s);

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t steps = 1000;
  std::string output_dir = "run_out";
  DataSource source = DataSource::scenario;
  std::string dataset_path;  // csv source
  std::string sidecar_path;  // optional, csv source
  /// Leading rows used only to train learned functions. For the scenario
  /// source these carry historical (biased) labels.
  std::size_t history_size = 2000;
  hiring::ScenarioConfig scenario;  // population and seed are set by the harness
  std::vector<FunctionSpec> portfolio = default_portfolio_specs();
  double eta = 0.25;
  double tau = 0.02;
  AuditConfig audit;
  EnhancementConfig enhancement;
  std::size_t reveal_delay = 0;
  std::size_t metrics_window = 500;

  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;  // 1-based
  SelectionRecord selection;
  std::map<std::string, std::string> sensitive_levels;  // attribute -> level of the instance
  std::optional<Label> desired;                          // set once revealed
  std::optional<double> revealed_loss;
};

struct RunEvent {
  std::size_t step = 0;
  std::string type;  // audit | prune | enhancement | reinsert | truncated
  std::string function_id;
  nlohmann::json detail = nlohmann::json::object();
  double wall_ms = 0.0;  // enhancement events only; excluded from canonical output
};

struct RunSeries {
  std::vector<double> framework_loss;
  std::vector<double> regret;
  std::vector<double> rolling_accuracy;             // NaN until something is revealed
  std::map<std::string, std::vector<double>> gaps;  // emitted-decision parity gap per attribute
};

struct RunReport {
  RunConfig config;
  std::vector<StepRecord> steps;
  RunSeries series;
  /// (attribute, metrics column) per sensitive attribute, in schema order.
  std::vector<std::pair<std::string, std::string>> gap_columns;
  std::vector<RunEvent> events;
  std::vector<PortfolioEntry> final_portfolio;
  std::map<std::string, double> function_losses;
  double framework_loss = 0.0;
  double regret = 0.0;
  std::vector<std::string> retired;
  bool truncated = false;
};

/// Runs the online select / reveal / update / audit / prune / enhance loop.
RunReport run(const RunConfig& cfg);

/// Re-executes the run described by a stored report and checks that every
/// step record is identical. Throws DivergenceError naming the first
/// differing step (1-based).
RunReport replay(const std::filesystem::path& report_path);
RunReport replay(const nlohmann::json& stored_report);

/// Writes metrics.csv and events.json into dir.
void metrics_export(const RunReport& report, const std::filesystem::path& dir);

/// Writes report.json, metrics.csv and events.json into dir.
void write_run_outputs(const RunReport& report, const std::filesystem::path& dir);

/// Emitted-decision parity gap on attr over steps [first, last) (0-based,
/// half-open), over levels with at least min_support decisions. NaN if fewer
/// than two levels qualify.
double emitted_gap(const RunReport& report, const std::string& attr, std::size_t first,
                   std::size_t last, std::size_t min_support);

/// Name of the metrics column for an attribute's gap, e.g. gap_zipgroup.
std::string gap_column(const AttributeSchema& schema, const std::string& attr);

}  // namespace hedgefair

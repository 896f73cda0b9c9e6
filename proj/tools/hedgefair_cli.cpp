// Command-line front end: generate, run, audit, enhance, replay.

#include <functional>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "hedgefair/dataset_io.hpp"
#include "hedgefair/serialization.hpp"
#include "hedgefair/sim_harness.hpp"

namespace hf = hedgefair;
using hf::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitDivergence = 3;

json read_json(const std::string& path) {
  try {
    return json::parse(hf::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw hf::ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void emit(const json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    hf::write_text_file(out_path, text);
  }
}

struct DatasetArgs {
  std::string dataset;
  std::string sidecar;
  std::string function_path;
  std::string rule;
  std::string audit_path;
  std::string enhancement_path;
  std::size_t train_rows = 0;
  std::string out;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& a) {
  cmd->add_option("--dataset", a.dataset, "Dataset CSV")->required();
  cmd->add_option("--sidecar", a.sidecar, "Schema sidecar JSON written by generate");
  auto* fn = cmd->add_option("--function", a.function_path, "Function spec JSON");
  auto* rule = cmd->add_option("--rule", a.rule, "Fixed rule, e.g. \"school >= 12\"");
  fn->excludes(rule);
  cmd->add_option("--audit-config", a.audit_path, "Audit settings JSON");
  cmd->add_option("--train-rows", a.train_rows,
                  "Leading rows used to train learned functions (default: all rows)");
  cmd->add_option("--out", a.out, "Output JSON path (default: stdout)");
}

struct Loaded {
  hf::Dataset all;
  hf::Dataset train;
  hf::Dataset eval;
  hf::DecisionFunction function;
  hf::AuditConfig audit;
};

hf::Dataset rows(const hf::Dataset& d, std::size_t first, std::size_t last) {
  hf::Dataset out;
  out.schema = d.schema;
  for (std::size_t k = first; k < last && k < d.size(); ++k) {
    out.instances.push_back(d.instances[k]);
    if (const auto* t = d.truth_for(d.instances[k].id)) out.truths[d.instances[k].id] = *t;
  }
  return out;
}

Loaded load(const DatasetArgs& a) {
  std::optional<hf::SchemaSidecar> sidecar;
  if (!a.sidecar.empty()) sidecar = hf::sidecar_from_json(read_json(a.sidecar));
  hf::Dataset all = hf::read_dataset_csv(a.dataset, sidecar);
  if (all.empty()) throw hf::ValidationError("dataset has no rows");
  const std::size_t split = a.train_rows == 0 ? all.size() : std::min(a.train_rows, all.size());
  hf::Dataset train = rows(all, 0, split);
  hf::Dataset eval = split < all.size() ? rows(all, split, all.size()) : all;

  hf::FunctionSpec spec;
  if (!a.function_path.empty()) {
    spec = hf::function_spec_from_json(read_json(a.function_path));
  } else if (!a.rule.empty()) {
    spec = {"rule", hf::FunctionKind::fixed_rule, a.rule, 1e-3};
  } else {
    throw hf::ValidationError("give --function or --rule");
  }
  auto f = hf::build_function(spec, all.schema, train);
  hf::AuditConfig audit;
  if (!a.audit_path.empty()) audit = hf::audit_config_from_json(read_json(a.audit_path));
  return {std::move(all), std::move(train), std::move(eval), std::move(f), audit};
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const hf::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const hf::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const hf::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware online selection over a portfolio of decision functions"};
  app.require_subcommand(1);

  // generate
  std::string gen_config, gen_out, gen_sidecar;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_population;
  auto* gen = app.add_subcommand("generate", "Write a synthetic hiring dataset and its sidecar");
  gen->add_option("--config", gen_config, "Scenario JSON");
  gen->add_option("--seed", gen_seed, "Overrides the config seed");
  gen->add_option("--population", gen_population, "Overrides the config population");
  gen->add_option("--out", gen_out, "Dataset CSV path")->required();
  gen->add_option("--sidecar", gen_sidecar, "Sidecar path (default: <out>.schema.json)");

  // run
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_steps;
  auto* runc = app.add_subcommand("run", "Run the online loop and write report and metrics");
  runc->add_option("--config", run_config, "Run config JSON (defaults apply to missing keys)");
  runc->add_option("--seed", run_seed, "Overrides the config seed");
  runc->add_option("--steps", run_steps, "Overrides the config step count");
  runc->add_option("--out", run_out, "Output directory (overrides output_dir)");

  // audit / enhance
  DatasetArgs audit_args, enh_args;
  auto* aud = app.add_subcommand("audit", "Audit one function on a dataset");
  add_dataset_options(aud, audit_args);
  auto* enh = app.add_subcommand("enhance", "Enhance one function on a dataset");
  add_dataset_options(enh, enh_args);
  enh->add_option("--enhancement-config", enh_args.enhancement_path, "Enhancement settings JSON");

  // replay
  std::string replay_path;
  auto* rep = app.add_subcommand("replay", "Re-execute a run report and verify every step");
  rep->add_option("report", replay_path, "report.json of a previous run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (*gen) {
    return guarded([&] {
      hf::hiring::ScenarioConfig cfg;
      if (!gen_config.empty()) cfg = hf::scenario_config_from_json(read_json(gen_config));
      if (gen_seed) cfg.seed = *gen_seed;
      if (gen_population) cfg.population = *gen_population;
      cfg.validate();
      const auto pop = hf::hiring::generate_population(cfg);
      hf::write_dataset_csv(pop.truth, gen_out);
      const std::string sidecar_path = gen_sidecar.empty() ? gen_out + ".schema.json" : gen_sidecar;
      json sidecar = {{"schema", hf::to_json(hf::sidecar_from_schema(*pop.truth.schema))},
                      {"generator", hf::to_json(cfg)}};
      hf::write_text_file(sidecar_path, sidecar.dump(2) + "\n");
      std::cout << "wrote " << pop.truth.size() << " rows to " << gen_out << " and schema to "
                << sidecar_path << '\n';
    });
  }
  if (*runc) {
    return guarded([&] {
      hf::RunConfig cfg;
      if (!run_config.empty()) cfg = hf::run_config_from_json(read_json(run_config));
      if (run_seed) cfg.seed = *run_seed;
      if (run_steps) cfg.steps = *run_steps;
      if (!run_out.empty()) cfg.output_dir = run_out;
      const auto report = hf::run(cfg);
      hf::write_run_outputs(report, cfg.output_dir);
      std::cout << "steps " << report.steps.size() << (report.truncated ? " (truncated)" : "")
                << ", framework loss " << report.framework_loss << ", regret " << report.regret
                << ", portfolio";
      for (const auto& e : report.final_portfolio) std::cout << ' ' << e.function_id;
      std::cout << "\noutputs in " << cfg.output_dir << '\n';
    });
  }
  if (*aud) {
    return guarded([&] {
      const auto l = load(audit_args);
      const auto report = hf::audit_function(l.function, l.eval, *l.all.schema, l.audit);
      json doc = hf::to_json(report);
      if (l.eval.fully_labeled()) doc["accuracy"] = hf::accuracy(l.function, l.eval);
      emit(doc, audit_args.out);
    });
  }
  if (*enh) {
    return guarded([&] {
      const auto l = load(enh_args);
      hf::EnhancementConfig ecfg;
      if (!enh_args.enhancement_path.empty()) {
        ecfg = hf::enhancement_config_from_json(read_json(enh_args.enhancement_path));
      }
      hf::EnhancementOutcome outcome;
      switch (l.function.kind()) {
        case hf::FunctionKind::fixed_rule:
          outcome = hf::report_uncontrollable(l.function);
          break;
        case hf::FunctionKind::retrainable_blackbox: {
          std::vector<std::pair<hf::Instance, hf::GroundTruthEntry>> mistakes;
          for (const auto& inst : l.eval.instances) {
            const auto* t = l.eval.truth_for(inst.id);
            if (t && hf::accuracy_error(l.function, inst, *t)) mistakes.emplace_back(inst, *t);
          }
          outcome = hf::enhance_blackbox(l.function, mistakes, l.eval, l.eval, l.audit, ecfg);
          break;
        }
        case hf::FunctionKind::constrained_margin:
          outcome = hf::enhance_margin(l.function, l.train, *l.all.schema, l.audit, ecfg);
          break;
      }
      emit(hf::to_json(outcome), enh_args.out);
    });
  }
  if (*rep) {
    return guarded([&] {
      const auto report = hf::replay(std::filesystem::path(replay_path));
      std::cout << "replay identical: " << report.steps.size() << " steps\n";
    });
  }
  return kExitOk;
}

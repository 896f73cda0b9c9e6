#include "hedgefair/serialization.hpp"

#include <cmath>
#include <set>

namespace hedgefair {
namespace {

// Reads keys from a JSON object and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ValidationError(context_ + " must be a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(context_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) {
        throw ValidationError("unknown key '" + context_ + "." + it.key() + "'");
      }
    }
  }

  const std::string& context() const { return context_; }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> used_;
};

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string coordinate_name(const FeatureEncoding& enc, std::size_t k) {
  const auto& c = enc.coordinates()[k];
  const auto& name = enc.schema()->at(c.attr).name;
  return c.level.empty() ? name : name + "=" + c.level;
}

}  // namespace

json to_json(const hiring::ScenarioConfig& cfg) {
  return {{"population", cfg.population},
          {"seed", cfg.seed},
          {"female_share", cfg.female_share},
          {"cities", cfg.cities},
          {"zip_groups", cfg.zip_groups},
          {"zips_per_prefix", cfg.zips_per_prefix},
          {"disadvantaged_group", cfg.disadvantaged_group},
          {"rho", cfg.rho},
          {"beta_gender", cfg.beta_gender},
          {"beta_latent", cfg.beta_latent},
          {"label_noise", cfg.label_noise},
          {"merit",
           {{"school_mean", cfg.merit.school_mean},
            {"school_sd", cfg.merit.school_sd},
            {"school_min", cfg.merit.school_min},
            {"school_max", cfg.merit.school_max},
            {"threshold_school", cfg.merit.threshold_school},
            {"slope", cfg.merit.slope},
            {"noise_sd", cfg.merit.noise_sd}}}};
}

hiring::ScenarioConfig scenario_config_from_json(const json& j, bool harness_owned) {
  hiring::ScenarioConfig cfg;
  StrictObject o(j, "scenario");
  if (harness_owned) {
    for (const char* key : {"population", "seed"}) {
      if (j.contains(key)) {
        throw ValidationError(std::string("scenario.") + key +
                              " is derived by the run; set steps/history_size/seed instead");
      }
    }
  } else {
    o.get("population", cfg.population);
    o.get("seed", cfg.seed);
  }
  o.get("female_share", cfg.female_share);
  o.get("cities", cfg.cities);
  o.get("zip_groups", cfg.zip_groups);
  o.get("zips_per_prefix", cfg.zips_per_prefix);
  o.get("disadvantaged_group", cfg.disadvantaged_group);
  o.get("rho", cfg.rho);
  o.get("beta_gender", cfg.beta_gender);
  o.get("beta_latent", cfg.beta_latent);
  o.get("label_noise", cfg.label_noise);
  if (const json* m = o.sub("merit")) {
    StrictObject mo(*m, "scenario.merit");
    mo.get("school_mean", cfg.merit.school_mean);
    mo.get("school_sd", cfg.merit.school_sd);
    mo.get("school_min", cfg.merit.school_min);
    mo.get("school_max", cfg.merit.school_max);
    mo.get("threshold_school", cfg.merit.threshold_school);
    mo.get("slope", cfg.merit.slope);
    mo.get("noise_sd", cfg.merit.noise_sd);
    mo.finish();
  }
  o.finish();
  cfg.validate();
  return cfg;
}

json to_json(const AuditConfig& cfg) {
  return {{"cadence", cfg.cadence},
          {"window", cfg.window},
          {"parity_threshold", cfg.parity_threshold},
          {"min_support", cfg.min_support},
          {"flip_rate_threshold", cfg.flip_rate_threshold},
          {"flip_cap", cfg.flip_cap},
          {"flip_stride", cfg.flip_stride},
          {"diagnostic_attributes", cfg.diagnostic_attributes}};
}

AuditConfig audit_config_from_json(const json& j) {
  AuditConfig cfg;
  StrictObject o(j, "audit");
  o.get("cadence", cfg.cadence);
  o.get("window", cfg.window);
  o.get("parity_threshold", cfg.parity_threshold);
  o.get("min_support", cfg.min_support);
  o.get("flip_rate_threshold", cfg.flip_rate_threshold);
  o.get("flip_cap", cfg.flip_cap);
  o.get("flip_stride", cfg.flip_stride);
  o.get("diagnostic_attributes", cfg.diagnostic_attributes);
  o.finish();
  cfg.validate();
  return cfg;
}

json to_json(const EnhancementConfig& cfg) {
  return {{"enabled", cfg.enabled},
          {"max_cuts", cfg.max_cuts},
          {"accuracy_floor", cfg.accuracy_floor},
          {"c_scale", cfg.c_scale},
          {"reg", cfg.reg}};
}

EnhancementConfig enhancement_config_from_json(const json& j) {
  EnhancementConfig cfg;
  StrictObject o(j, "enhancement");
  o.get("enabled", cfg.enabled);
  o.get("max_cuts", cfg.max_cuts);
  o.get("accuracy_floor", cfg.accuracy_floor);
  o.get("c_scale", cfg.c_scale);
  o.get("reg", cfg.reg);
  o.finish();
  cfg.validate();
  return cfg;
}

json to_json(const FunctionSpec& spec) {
  json j = {{"id", spec.id}, {"kind", to_string(spec.kind)}};
  if (spec.kind == FunctionKind::fixed_rule) {
    j["rule"] = spec.rule;
  } else {
    j["reg"] = spec.reg;
  }
  return j;
}

FunctionSpec function_spec_from_json(const json& j) {
  FunctionSpec spec;
  StrictObject o(j, "function");
  std::string kind = "fixed_rule";
  o.get("id", spec.id);
  o.get("kind", kind);
  spec.kind = function_kind_from_string(kind);
  if (spec.kind == FunctionKind::fixed_rule) {
    o.get("rule", spec.rule);
    if (spec.rule.empty()) throw ValidationError("fixed_rule '" + spec.id + "' needs a rule");
  } else {
    o.get("reg", spec.reg);
    if (!(spec.reg >= 0.0)) throw ValidationError("reg must be non-negative");
  }
  o.finish();
  if (spec.id.empty()) throw ValidationError("function spec needs an id");
  return spec;
}

json to_json(const RunConfig& cfg) {
  json scenario = to_json(cfg.scenario);
  scenario.erase("population");
  scenario.erase("seed");
  json portfolio = json::array();
  for (const auto& s : cfg.portfolio) portfolio.push_back(to_json(s));
  return {{"seed", cfg.seed},
          {"steps", cfg.steps},
          {"output_dir", cfg.output_dir},
          {"source", to_string(cfg.source)},
          {"dataset_path", cfg.dataset_path},
          {"sidecar_path", cfg.sidecar_path},
          {"history_size", cfg.history_size},
          {"scenario", scenario},
          {"portfolio", portfolio},
          {"selector", {{"eta", cfg.eta}, {"tau", cfg.tau}}},
          {"audit", to_json(cfg.audit)},
          {"enhancement", to_json(cfg.enhancement)},
          {"reveal_delay", cfg.reveal_delay},
          {"metrics_window", cfg.metrics_window}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  StrictObject o(j, "config");
  o.get("seed", cfg.seed);
  o.get("steps", cfg.steps);
  o.get("output_dir", cfg.output_dir);
  std::string source = to_string(cfg.source);
  o.get("source", source);
  cfg.source = data_source_from_string(source);
  o.get("dataset_path", cfg.dataset_path);
  o.get("sidecar_path", cfg.sidecar_path);
  o.get("history_size", cfg.history_size);
  if (const json* s = o.sub("scenario")) cfg.scenario = scenario_config_from_json(*s, true);
  if (const json* p = o.sub("portfolio")) {
    if (!p->is_array()) throw ValidationError("config.portfolio must be an array");
    cfg.portfolio.clear();
    for (const auto& f : *p) cfg.portfolio.push_back(function_spec_from_json(f));
  }
  if (const json* s = o.sub("selector")) {
    StrictObject so(*s, "config.selector");
    so.get("eta", cfg.eta);
    so.get("tau", cfg.tau);
    so.finish();
  }
  if (const json* a = o.sub("audit")) cfg.audit = audit_config_from_json(*a);
  if (const json* e = o.sub("enhancement")) cfg.enhancement = enhancement_config_from_json(*e);
  o.get("reveal_delay", cfg.reveal_delay);
  o.get("metrics_window", cfg.metrics_window);
  o.finish();
  cfg.validate();
  return cfg;
}

json to_json(const SchemaSidecar& sidecar) {
  return {{"cities", sidecar.cities}, {"zip_groups", sidecar.zip_to_group}};
}

SchemaSidecar sidecar_from_json(const json& j) {
  SchemaSidecar sc;
  StrictObject o(j, "sidecar");
  const json* schema = o.sub("schema");
  o.sub("generator");  // provenance, informational
  o.finish();
  if (schema == nullptr) throw ValidationError("sidecar has no schema section");
  StrictObject so(*schema, "sidecar.schema");
  so.get("cities", sc.cities);
  so.get("zip_groups", sc.zip_to_group);
  so.finish();
  if (sc.cities.empty() || sc.zip_to_group.empty()) {
    throw ValidationError("sidecar schema needs cities and zip_groups");
  }
  return sc;
}

json to_json(const FlipFinding& f) {
  return {{"function_id", f.function_id},
          {"base_id", f.base_id},
          {"flipped", f.flipped},
          {"base_label", to_int(f.base_label)},
          {"variant_label", to_int(f.variant_label)}};
}

json to_json(const ParityReport& p) {
  json groups = json::object();
  for (const auto& [level, g] : p.groups) {
    groups[level] = {{"accepted", g.accepted}, {"total", g.total}, {"rate", g.rate}};
  }
  return {{"function_id", p.function_id},
          {"attribute", p.attribute},
          {"groups", groups},
          {"gap", p.gap ? json(*p.gap) : json(nullptr)},
          {"low_support", p.low_support},
          {"unfair", p.unfair}};
}

json to_json(const AuditReport& r, std::size_t max_findings) {
  json parity = json::array();
  for (const auto& p : r.parity) parity.push_back(to_json(p));
  json findings = json::array();
  for (std::size_t k = 0; k < r.flip_findings.size() && k < max_findings; ++k) {
    findings.push_back(to_json(r.flip_findings[k]));
  }
  return {{"function_id", r.function_id},
          {"window_size", r.window_size},
          {"parity", parity},
          {"flip_tested", r.flip_tested},
          {"flip_failed", r.flip_failed},
          {"flip_rate", r.flip_rate},
          {"flip_finding_count", r.flip_findings.size()},
          {"flip_findings", findings},
          {"diagnostic_findings", r.diagnostic_findings},
          {"low_support", r.low_support},
          {"unfair", r.unfair},
          {"reasons", r.reasons}};
}

json to_json(const FairnessConstraint& c) {
  return {{"attributes", c.attributes}, {"bound", c.bound}, {"coordinates", c.coordinates}};
}

json to_json(const DecisionFunction& f) {
  json j = {{"id", f.id()}, {"kind", to_string(f.kind())}, {"description", f.describe()}};
  if (const auto* r = f.rule()) {
    j["rule"] = r->expr.source();
  } else if (const auto* b = f.blackbox()) {
    j["training_rows"] = b->training_set()->size();
    j["degenerate"] = b->degenerate();
  } else if (const auto* m = f.margin_model()) {
    json w = json::object();
    for (std::size_t k = 0; k < m->encoding->dimension(); ++k) {
      w[coordinate_name(*m->encoding, k)] = m->weights[static_cast<Eigen::Index>(k)];
    }
    json cons = json::array();
    for (const auto& c : m->constraints) cons.push_back(to_json(c));
    j["weights"] = w;
    j["intercept"] = m->intercept;
    j["constraints"] = cons;
    j["reg"] = m->reg;
    j["training_loss"] = m->training_loss;
  }
  return j;
}

json to_json(const EnhancementOutcome& o) {
  json cuts = json::array();
  for (const auto& c : o.cuts) cuts.push_back(to_json(c));
  json j = {{"function_id", o.function_id},
            {"status", to_string(o.status)},
            {"cuts", cuts},
            {"iterations", o.iterations},
            {"cause", o.cause},
            {"degenerate", o.degenerate}};
  j["function"] = o.function ? to_json(*o.function) : json(nullptr);
  j["final_audit"] = o.final_audit ? to_json(*o.final_audit) : json(nullptr);
  j["final_accuracy"] = o.final_accuracy ? json(*o.final_accuracy) : json(nullptr);
  return j;
}

json to_json(const SelectionRecord& r) {
  json labels = json::array();
  for (Label l : r.labels) labels.push_back(to_int(l));
  return {{"instance_id", r.instance_id},
          {"chosen", r.chosen},
          {"emitted", to_int(r.emitted)},
          {"draw", r.draw},
          {"function_ids", r.function_ids},
          {"probabilities", r.probabilities},
          {"labels", labels}};
}

json to_json(const StepRecord& s) {
  json j = to_json(s.selection);
  j["step"] = s.step;
  j["sensitive_levels"] = s.sensitive_levels;
  j["desired"] = s.desired ? json(to_int(*s.desired)) : json(nullptr);
  j["revealed_loss"] = s.revealed_loss ? json(*s.revealed_loss) : json(nullptr);
  return j;
}

json to_json(const RunEvent& e, bool canonical) {
  json j = {{"step", e.step}, {"type", e.type}, {"function_id", e.function_id},
            {"detail", e.detail}};
  if (!canonical && e.type == "enhancement") j["wall_ms"] = e.wall_ms;
  return j;
}

json to_json(const RunReport& r, bool canonical) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  json events = json::array();
  for (const auto& e : r.events) events.push_back(to_json(e, canonical));
  auto series_json = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number_or_null(x));
    return a;
  };
  json gaps = json::object();
  for (const auto& [attr, v] : r.series.gaps) gaps[attr] = series_json(v);
  json portfolio = json::array();
  for (const auto& e : r.final_portfolio) {
    portfolio.push_back({{"function_id", e.function_id}, {"weight", e.weight}});
  }
  return {{"config", to_json(r.config)},
          {"steps_executed", r.steps.size()},
          {"truncated", r.truncated},
          {"framework_loss", r.framework_loss},
          {"regret", r.regret},
          {"function_losses", r.function_losses},
          {"final_portfolio", portfolio},
          {"retired", r.retired},
          {"series",
           {{"framework_loss", series_json(r.series.framework_loss)},
            {"regret", series_json(r.series.regret)},
            {"rolling_accuracy", series_json(r.series.rolling_accuracy)},
            {"gaps", gaps}}},
          {"gap_columns", r.gap_columns},
          {"events", events},
          {"steps", steps}};
}

}  // namespace hedgefair

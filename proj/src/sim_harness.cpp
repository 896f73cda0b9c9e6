#include "hedgefair/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

#include "hedgefair/dataset_io.hpp"
#include "hedgefair/serialization.hpp"

namespace hedgefair {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StreamData {
  SchemaPtr schema;
  Dataset history;
  Dataset stream;
};

Dataset slice(const Dataset& d, std::size_t first, std::size_t last) {
  Dataset out;
  out.schema = d.schema;
  last = std::min(last, d.size());
  for (std::size_t k = first; k < last; ++k) {
    const auto& inst = d.instances[k];
    out.instances.push_back(inst);
    if (const auto* t = d.truth_for(inst.id)) out.truths[inst.id] = *t;
  }
  return out;
}

StreamData load_stream(const RunConfig& cfg) {
  StreamData s;
  switch (cfg.source) {
    case DataSource::scenario: {
      hiring::ScenarioConfig sc = cfg.scenario;
      sc.population = cfg.history_size + cfg.steps;
      sc.seed = RngStream::mix(cfg.seed, "scenario");
      auto pop = hiring::generate_population(sc);
      s.schema = pop.truth.schema;
      s.history = slice(pop.historical, 0, cfg.history_size);
      s.stream = slice(pop.truth, cfg.history_size, pop.truth.size());
      break;
    }
    case DataSource::csv: {
      std::optional<SchemaSidecar> sidecar;
      if (!cfg.sidecar_path.empty()) {
        sidecar = sidecar_from_json(json::parse(read_text_file(cfg.sidecar_path), nullptr, true));
      }
      auto data = read_dataset_csv(cfg.dataset_path, sidecar);
      s.schema = data.schema;
      s.history = slice(data, 0, cfg.history_size);
      s.stream = slice(data, cfg.history_size, data.size());
      break;
    }
    case DataSource::fixture: {
      auto data = hiring::example_fixture();
      s.schema = data.schema;
      s.history = slice(data, 0, 0);
      s.stream = std::move(data);
      break;
    }
  }
  return s;
}

struct Revealed {
  Instance instance;
  GroundTruthEntry entry;
  std::size_t step_index;  // 0-based index into the step records
};

// Sliding window over emitted decisions: correctness and per-level acceptance.
class RollingMetrics {
 public:
  RollingMetrics(std::vector<std::string> attrs, std::size_t window, std::size_t min_support)
      : attrs_(std::move(attrs)), window_(window), min_support_(min_support),
        counts_(attrs_.size()) {}

  void add_emitted(const StepRecord& r) {
    emitted_.push_back(&r);
    adjust(r, +1);
    if (emitted_.size() > window_) {
      adjust(*emitted_.front(), -1);
      emitted_.pop_front();
    }
  }

  void add_revealed(bool correct) {
    correct_.push_back(correct);
    hits_ += correct ? 1 : 0;
    if (correct_.size() > window_) {
      hits_ -= correct_.front() ? 1 : 0;
      correct_.pop_front();
    }
  }

  double accuracy() const {
    return correct_.empty() ? kNaN
                            : static_cast<double>(hits_) / static_cast<double>(correct_.size());
  }

  double gap(std::size_t a) const {
    double lo = 1.0, hi = 0.0;
    std::size_t eligible = 0;
    for (const auto& [level, c] : counts_[a]) {
      if (c.second < static_cast<long>(min_support_) || c.second == 0) continue;
      const double rate = static_cast<double>(c.first) / static_cast<double>(c.second);
      lo = std::min(lo, rate);
      hi = std::max(hi, rate);
      ++eligible;
    }
    return eligible < 2 ? kNaN : hi - lo;
  }

 private:
  void adjust(const StepRecord& r, int sign) {
    for (std::size_t a = 0; a < attrs_.size(); ++a) {
      auto& c = counts_[a][r.sensitive_levels.at(attrs_[a])];
      c.first += sign * to_int(r.selection.emitted);
      c.second += sign;
    }
  }

  std::vector<std::string> attrs_;
  std::size_t window_;
  std::size_t min_support_;
  std::vector<std::map<std::string, std::pair<long, long>>> counts_;  // accepted, total
  std::deque<const StepRecord*> emitted_;
  std::deque<bool> correct_;
  std::size_t hits_ = 0;
};

json audit_summary(const AuditReport& r) {
  json gaps = json::object();
  for (const auto& p : r.parity) gaps[p.attribute] = p.gap ? json(*p.gap) : json(nullptr);
  return {{"unfair", r.unfair},
          {"reasons", r.reasons},
          {"window_size", r.window_size},
          {"gaps", gaps},
          {"flip_rate", r.flip_rate},
          {"low_support", r.low_support}};
}

class Runner {
 public:
  explicit Runner(const RunConfig& cfg) : cfg_(cfg), data_(load_stream(cfg)) {
    schema_ = data_.schema;
    sensitive_ = schema_->sensitive_categorical();
    std::vector<std::string> ids;
    for (const auto& spec : cfg_.portfolio) {
      auto f = build_function(spec, schema_, data_.history);
      ids.push_back(f.id());
      table_.emplace(f.id(), std::move(f));
    }
    state_.emplace(ids, cfg_.eta, cfg_.tau);
    revealed_data_.schema = schema_;
  }

  RunReport run() {
    RunReport report;
    report.config = cfg_;
    for (const auto& attr : sensitive_) report.gap_columns.emplace_back(attr, gap_column(*schema_, attr));
    const std::size_t available = data_.stream.size();
    const std::size_t total = std::min(cfg_.steps, available);
    report.steps.reserve(total);
    steps_view_ = &report.steps;
    RngStream rng = RngStream(cfg_.seed).derive("select");
    RollingMetrics metrics(sensitive_, cfg_.metrics_window, cfg_.audit.min_support);
    std::deque<std::size_t> pending;

    for (std::size_t t = 0; t < total; ++t) {
      const Instance& inst = data_.stream.instances[t];
      StepRecord rec;
      rec.step = t + 1;
      rec.selection = select(*state_, table_, inst, rng);
      for (const auto& attr : sensitive_) {
        const std::size_t a = schema_->index_of(attr);
        rec.sensitive_levels[attr] = schema_->at(a).level_of(inst.categorical(a));
      }
      report.steps.push_back(std::move(rec));
      metrics.add_emitted(report.steps.back());
      pending.push_back(t);

      while (!pending.empty() && pending.front() + cfg_.reveal_delay <= t) {
        reveal(report, pending.front(), metrics);
        pending.pop_front();
      }

      // Audits wait for a full window; smaller samples flag fair members on noise.
      if ((t + 1) % cfg_.audit.cadence == 0 && t + 1 >= cfg_.audit.window) audit_round(report, t);

      report.series.framework_loss.push_back(state_->framework_loss());
      report.series.regret.push_back(state_->regret());
      report.series.rolling_accuracy.push_back(metrics.accuracy());
      for (std::size_t a = 0; a < sensitive_.size(); ++a) {
        report.series.gaps[sensitive_[a]].push_back(metrics.gap(a));
      }
    }

    if (total < cfg_.steps) {
      report.truncated = true;
      RunEvent e;
      e.step = total;
      e.type = "truncated";
      e.detail = {{"requested", cfg_.steps}, {"available", available}};
      report.events.push_back(std::move(e));
    }
    report.final_portfolio = state_->entries();
    report.function_losses = state_->function_losses();
    report.framework_loss = state_->framework_loss();
    report.regret = state_->regret();
    report.retired = retired_;
    return report;
  }

 private:
  void reveal(RunReport& report, std::size_t index, RollingMetrics& metrics) {
    StepRecord& rec = report.steps[index];
    const Instance& inst = data_.stream.instances[index];
    const GroundTruthEntry* entry = data_.stream.truth_for(inst.id);
    if (entry == nullptr) return;  // unlabeled row: nothing to learn from
    update_weights(*state_, rec.selection, *entry);
    rec.desired = entry->desired;
    rec.revealed_loss = loss(*entry, rec.selection.emitted);
    metrics.add_revealed(rec.selection.emitted == entry->desired);
    revealed_.push_back({inst, *entry, index});
    revealed_data_.instances.push_back(inst);
    revealed_data_.truths[inst.id] = *entry;
  }

  Dataset audit_window(std::size_t t) const {
    const std::size_t end = t + 1;
    const std::size_t begin = end > cfg_.audit.window ? end - cfg_.audit.window : 0;
    Dataset w;
    w.schema = schema_;
    w.instances.assign(data_.stream.instances.begin() + static_cast<std::ptrdiff_t>(begin),
                       data_.stream.instances.begin() + static_cast<std::ptrdiff_t>(end));
    return w;
  }

  void audit_round(RunReport& report, std::size_t t) {
    const std::size_t step = t + 1;
    const Dataset window = audit_window(t);
    std::vector<std::string> flagged;
    for (const auto& e : state_->entries()) {
      const auto audit = audit_function(table_.at(e.function_id), window, *schema_, cfg_.audit);
      RunEvent ev;
      ev.step = step;
      ev.type = "audit";
      ev.function_id = e.function_id;
      ev.detail = audit_summary(audit);
      report.events.push_back(std::move(ev));
      if (audit.unfair && cfg_.enhancement.enabled) flagged.push_back(e.function_id);
    }

    // Raw weights shrink geometrically; compare tau against the rescaled ones.
    state_->normalize();
    std::vector<std::pair<std::string, std::string>> removed;
    for (const auto& id : state_->remove(flagged)) removed.emplace_back(id, "unfair");
    for (const auto& id : state_->prune()) removed.emplace_back(id, "low_weight");

    for (const auto& [id, reason] : removed) {
      RunEvent pe;
      pe.step = step;
      pe.type = "prune";
      pe.function_id = id;
      pe.detail = {{"reason", reason}};
      report.events.push_back(std::move(pe));

      const auto start = std::chrono::steady_clock::now();
      EnhancementOutcome outcome = enhance(id, window);
      const auto stop = std::chrono::steady_clock::now();

      RunEvent ee;
      ee.step = step;
      ee.type = "enhancement";
      ee.function_id = id;
      ee.detail = to_json(outcome);
      ee.detail.erase("function");
      ee.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      report.events.push_back(std::move(ee));

      if (outcome.status == EnhancementStatus::enhanced) {
        table_.insert_or_assign(id, std::move(*outcome.function));
        state_->reinsert(id);
        RunEvent re;
        re.step = step;
        re.type = "reinsert";
        re.function_id = id;
        re.detail = {{"weight", state_->weight(id)}};
        report.events.push_back(std::move(re));
      } else {
        table_.erase(id);
        retired_.push_back(id);
      }
    }
  }

  // Labeled training data: the history rows plus every revealed arrival.
  Dataset training_data() const {
    Dataset d;
    d.schema = schema_;
    d.instances = data_.history.instances;
    d.truths = data_.history.truths;
    for (const auto& r : revealed_) {
      if (d.truths.contains(r.instance.id)) continue;
      d.instances.push_back(r.instance);
      d.truths[r.instance.id] = r.entry;
    }
    return d;
  }

  EnhancementOutcome enhance(const std::string& id, const Dataset& window) {
    const DecisionFunction& f = table_.at(id);
    if (!cfg_.enhancement.enabled) {
      EnhancementOutcome out;
      out.function_id = id;
      out.cause = "enhancement disabled";
      return out;
    }
    switch (f.kind()) {
      case FunctionKind::fixed_rule:
        return report_uncontrollable(f);
      case FunctionKind::retrainable_blackbox:
        return enhance_blackbox_member(f, window);
      case FunctionKind::constrained_margin:
        return enhance_margin_member(f);
    }
    throw Error("unknown function kind");
  }

  EnhancementOutcome enhance_blackbox_member(const DecisionFunction& f, const Dataset& window) {
    std::vector<std::pair<Instance, GroundTruthEntry>> mistakes;
    for (const auto& r : revealed_) {
      // Only decisions the function actually made count as its mistakes.
      const auto label = steps_view_->at(r.step_index).selection.label_of(f.id());
      if (label && *label != r.entry.desired) mistakes.emplace_back(r.instance, r.entry);
    }
    return enhance_blackbox(f, mistakes, window, revealed_data_, cfg_.audit, cfg_.enhancement);
  }

  EnhancementOutcome enhance_margin_member(const DecisionFunction& f) {
    const auto& model = *f.margin_model();
    const Dataset train = training_data();
    DecisionFunction refit = f;
    try {
      refit = train_constrained(f.id(), train, model.encoding, model.constraints, model.reg);
    } catch (const InfeasibleError& e) {
      EnhancementOutcome out;
      out.function_id = f.id();
      out.cause = std::string("infeasible: ") + e.what();
      return out;
    }
    return enhance_margin(refit, train, *schema_, cfg_.audit, cfg_.enhancement);
  }

  const RunConfig& cfg_;
  StreamData data_;
  SchemaPtr schema_;
  std::vector<std::string> sensitive_;
  FunctionTable table_;
  std::optional<PortfolioState> state_;
  std::vector<Revealed> revealed_;
  Dataset revealed_data_;
  std::vector<std::string> retired_;
  const std::vector<StepRecord>* steps_view_ = nullptr;
};

std::string csv_number(double x) { return std::isfinite(x) ? format_double(x) : ""; }

}  // namespace

std::vector<FunctionSpec> default_portfolio_specs() {
  return {{"school_rule", FunctionKind::fixed_rule, "school >= 12", 1e-3},
          {"gender_rule", FunctionKind::fixed_rule, "gender == M", 1e-3},
          {"blackbox", FunctionKind::retrainable_blackbox, "", 1e-3},
          {"margin", FunctionKind::constrained_margin, "", 1e-3}};
}

DecisionFunction build_function(const FunctionSpec& spec, const SchemaPtr& schema,
                                const Dataset& history) {
  switch (spec.kind) {
    case FunctionKind::fixed_rule:
      return DecisionFunction::make_rule(spec.id, schema, spec.rule);
    case FunctionKind::retrainable_blackbox:
    case FunctionKind::constrained_margin:
      break;
  }
  if (history.empty() || !history.fully_labeled()) {
    throw ValidationError("function '" + spec.id + "' needs a fully labeled training history");
  }
  if (spec.kind == FunctionKind::retrainable_blackbox) {
    auto shared = std::make_shared<const Dataset>(history);
    return DecisionFunction::make_blackbox(spec.id, RetrainableBlackBox::fit(shared, spec.reg));
  }
  auto encoding =
      std::make_shared<const FeatureEncoding>(FeatureEncoding::fit(schema, history.instances));
  return train_constrained(spec.id, history, encoding, {}, spec.reg);
}

const char* to_string(DataSource s) {
  switch (s) {
    case DataSource::scenario:
      return "scenario";
    case DataSource::csv:
      return "csv";
    case DataSource::fixture:
      return "fixture";
  }
  return "?";
}

DataSource data_source_from_string(const std::string& s) {
  if (s == "scenario") return DataSource::scenario;
  if (s == "csv") return DataSource::csv;
  if (s == "fixture") return DataSource::fixture;
  throw ValidationError("unknown data source '" + s + "'");
}

void RunConfig::validate() const {
  if (steps < 1) throw ValidationError("steps must be at least 1");
  if (!(eta > 0.0 && eta <= 0.5)) throw ValidationError("eta must lie in (0, 1/2]");
  if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
  if (metrics_window < 1) throw ValidationError("metrics_window must be at least 1");
  if (portfolio.empty()) throw ValidationError("portfolio must not be empty");
  std::set<std::string> ids;
  for (const auto& spec : portfolio) {
    if (spec.id.empty()) throw ValidationError("function spec needs an id");
    if (!ids.insert(spec.id).second) throw ValidationError("duplicate function id '" + spec.id + "'");
    if (spec.kind == FunctionKind::fixed_rule && spec.rule.empty()) {
      throw ValidationError("fixed_rule '" + spec.id + "' needs a rule");
    }
  }
  if (source == DataSource::csv && dataset_path.empty()) {
    throw ValidationError("csv source needs dataset_path");
  }
  audit.validate();
  enhancement.validate();
  scenario.validate();
}

RunReport run(const RunConfig& cfg) {
  cfg.validate();
  Runner runner(cfg);
  return runner.run();
}

RunReport replay(const json& stored) {
  if (!stored.is_object() || !stored.contains("config")) {
    throw ValidationError("report has no config echo");
  }
  if (!stored.contains("steps") || !stored.at("steps").is_array()) {
    throw ValidationError("report has no step records");
  }
  RunReport fresh = run(run_config_from_json(stored.at("config")));
  const json& old_steps = stored.at("steps");
  const std::size_t n = std::max(old_steps.size(), fresh.steps.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (k >= old_steps.size() || k >= fresh.steps.size() ||
        to_json(fresh.steps[k]) != old_steps[k]) {
      throw DivergenceError("replay diverges at step " + std::to_string(k + 1), k + 1);
    }
  }
  json canonical = to_json(fresh, true);
  json stored_canonical = stored;
  for (auto& e : stored_canonical["events"]) e.erase("wall_ms");
  if (canonical.dump() != stored_canonical.dump()) {
    throw DivergenceError("replay matches every step but the report summary differs",
                          fresh.steps.size() + 1);
  }
  return fresh;
}

RunReport replay(const std::filesystem::path& report_path) {
  json stored;
  try {
    stored = json::parse(read_text_file(report_path));
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + report_path.string() + "' is not valid JSON: " + e.what());
  }
  return replay(stored);
}

std::string gap_column(const AttributeSchema& schema, const std::string& attr) {
  const auto& desc = schema.at(schema.index_of(attr));
  return "gap_" + attr + (desc.grouping ? "group" : "");
}

void metrics_export(const RunReport& report, const std::filesystem::path& dir) {
  std::ostringstream csv;
  csv << "step,framework_loss,regret,rolling_accuracy";
  for (const auto& [attr, column] : report.gap_columns) csv << ',' << column;
  csv << '\n';
  const auto& s = report.series;
  for (std::size_t k = 0; k < report.steps.size(); ++k) {
    csv << report.steps[k].step << ',' << csv_number(s.framework_loss[k]) << ','
        << csv_number(s.regret[k]) << ',' << csv_number(s.rolling_accuracy[k]);
    for (const auto& [attr, column] : report.gap_columns) {
      csv << ',' << csv_number(s.gaps.at(attr)[k]);
    }
    csv << '\n';
  }
  write_text_file(dir / "metrics.csv", csv.str());
  json events = json::array();
  for (const auto& e : report.events) events.push_back(to_json(e));
  write_text_file(dir / "events.json", events.dump(2) + "\n");
}

void write_run_outputs(const RunReport& report, const std::filesystem::path& dir) {
  write_text_file(dir / "report.json", to_json(report).dump() + "\n");
  metrics_export(report, dir);
}

double emitted_gap(const RunReport& report, const std::string& attr, std::size_t first,
                   std::size_t last, std::size_t min_support) {
  last = std::min(last, report.steps.size());
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t k = first; k < last; ++k) {
    const auto& r = report.steps[k];
    auto& c = counts[r.sensitive_levels.at(attr)];
    c.first += to_int(r.selection.emitted);
    ++c.second;
  }
  double lo = 1.0, hi = 0.0;
  std::size_t eligible = 0;
  for (const auto& [level, c] : counts) {
    if (c.second < min_support || c.second == 0) continue;
    const double rate = static_cast<double>(c.first) / static_cast<double>(c.second);
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
    ++eligible;
  }
  return eligible < 2 ? kNaN : hi - lo;
}

}  // namespace hedgefair

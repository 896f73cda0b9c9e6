#include "hedgefair/enhancer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hedgefair {
namespace {

const MarginClassifier& require_margin(const DecisionFunction& f) {
  const auto* m = f.margin_model();
  if (m == nullptr) {
    throw ValidationError("function '" + f.id() + "' is not a constrained margin classifier");
  }
  return *m;
}

// Joint level of the subset's attributes, e.g. "F|G2".
std::string combo_key(const AttributeSchema& schema, const std::vector<std::size_t>& attrs,
                      const Instance& inst) {
  std::string key;
  for (std::size_t k = 0; k < attrs.size(); ++k) {
    if (k) key += '|';
    key += schema.at(attrs[k]).level_of(inst.categorical(attrs[k]));
  }
  return key;
}

std::vector<std::size_t> subset_indices(const AttributeSchema& schema,
                                        const std::vector<std::string>& subset) {
  if (subset.empty()) throw ValidationError("constraint subset is empty");
  std::vector<std::size_t> idx;
  for (const auto& name : subset) {
    const std::size_t a = schema.index_of(name);
    const auto& desc = schema.at(a);
    if (!is_sensitive(desc.sensitivity) || desc.kind != AttributeKind::categorical) {
      throw ValidationError("constraint attribute '" + name +
                            "' is not a sensitive categorical attribute");
    }
    idx.push_back(a);
  }
  return idx;
}

// Mean-centered group indicators, one column per combination present.
std::map<std::string, std::vector<double>> centered_indicators(
    const AttributeSchema& schema, const std::vector<std::string>& subset,
    const std::vector<Instance>& instances) {
  const auto idx = subset_indices(schema, subset);
  std::vector<std::string> keys;
  keys.reserve(instances.size());
  std::map<std::string, std::size_t> counts;
  for (const auto& inst : instances) {
    keys.push_back(combo_key(schema, idx, inst));
    ++counts[keys.back()];
  }
  const double n = static_cast<double>(instances.size());
  std::map<std::string, std::vector<double>> out;
  for (const auto& [key, count] : counts) {
    const double mean = static_cast<double>(count) / n;
    std::vector<double> z(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) z[i] = (keys[i] == key ? 1.0 : 0.0) - mean;
    out.emplace(key, std::move(z));
  }
  return out;
}

std::vector<std::string> canonical_subset(const AttributeSchema& schema,
                                          std::vector<std::string> subset) {
  std::sort(subset.begin(), subset.end(), [&](const std::string& a, const std::string& b) {
    return schema.index_of(a) < schema.index_of(b);
  });
  return subset;
}

}  // namespace

const char* to_string(EnhancementStatus s) {
  switch (s) {
    case EnhancementStatus::enhanced:
      return "enhanced";
    case EnhancementStatus::reported_upstream:
      return "reported_upstream";
    case EnhancementStatus::failed:
      return "failed";
  }
  return "?";
}

void EnhancementConfig::validate() const {
  if (!(accuracy_floor >= 0.0 && accuracy_floor <= 1.0)) {
    throw ValidationError("accuracy floor must lie in [0, 1]");
  }
  if (!(c_scale >= 0.0)) throw ValidationError("c_scale must be non-negative");
  if (!(reg >= 0.0)) throw ValidationError("reg must be non-negative");
}

EnhancementOutcome report_uncontrollable(const DecisionFunction& f) {
  if (f.kind() != FunctionKind::fixed_rule) {
    throw ValidationError("function '" + f.id() +
                          "' can be modified; report_uncontrollable is for fixed rules");
  }
  EnhancementOutcome out;
  out.function_id = f.id();
  out.status = EnhancementStatus::reported_upstream;
  out.cause = "no control over the function; issues reported to its provider";
  return out;
}

RetrainResult retrain_blackbox(const DecisionFunction& f, const Dataset& base_training,
                               const std::vector<std::pair<Instance, GroundTruthEntry>>& mistakes) {
  const auto* box = f.blackbox();
  if (box == nullptr) {
    throw ValidationError("function '" + f.id() + "' is not a retrainable black box");
  }
  if (mistakes.empty()) throw ValidationError("retraining needs at least one mistake");

  auto merged = std::make_shared<Dataset>();
  merged->schema = base_training.schema ? base_training.schema : f.schema();
  std::map<std::uint64_t, std::size_t> newer;
  for (std::size_t k = 0; k < mistakes.size(); ++k) newer[mistakes[k].first.id] = k;
  for (const auto& inst : base_training.instances) {
    if (newer.contains(inst.id)) continue;
    merged->instances.push_back(inst);
    if (const auto* t = base_training.truth_for(inst.id)) merged->truths[inst.id] = *t;
  }
  for (const auto& [id, k] : newer) {
    const auto& [inst, entry] = mistakes[k];
    if (entry.instance_id != inst.id) {
      throw ValidationError("mistake entry does not match its instance");
    }
    merged->instances.push_back(inst);
    merged->truths[inst.id] = entry;
  }
  merged->validate();
  auto retrained = RetrainableBlackBox::fit(merged, box->reg());
  const bool degenerate = retrained.degenerate();
  return {DecisionFunction::make_blackbox(f.id(), std::move(retrained)), degenerate};
}

EnhancementOutcome enhance_blackbox(
    const DecisionFunction& f, const std::vector<std::pair<Instance, GroundTruthEntry>>& mistakes,
    const Dataset& audit_data, const Dataset& labeled, const AuditConfig& audit,
    const EnhancementConfig& config) {
  const auto* box = f.blackbox();
  if (box == nullptr) {
    throw ValidationError("function '" + f.id() + "' is not a retrainable black box");
  }
  config.validate();
  EnhancementOutcome out;
  out.function_id = f.id();
  DecisionFunction current = f;
  if (!mistakes.empty()) {
    auto rr = retrain_blackbox(f, *box->training_set(), mistakes);
    current = std::move(rr.function);
    out.degenerate = rr.degenerate;
    out.iterations = 1;
  }
  auto report = audit_function(current, audit_data, *audit_data.schema, audit);
  const double acc = accuracy(current, labeled.empty() ? *current.blackbox()->training_set() : labeled);
  out.final_accuracy = acc;
  const bool fair = !report.unfair;
  out.final_audit = std::move(report);
  if (!fair) {
    out.cause = "retrained black box still fails the audit";
  } else if (acc < config.accuracy_floor) {
    out.cause = "accuracy " + std::to_string(acc) + " below floor " +
                std::to_string(config.accuracy_floor);
  } else {
    out.status = EnhancementStatus::enhanced;
    out.function = std::move(current);
  }
  return out;
}

std::vector<LinearBound> covariance_rows(const std::vector<std::string>& subset,
                                         const Dataset& data, const Eigen::MatrixXd& X,
                                         double bound) {
  const auto& schema = *data.schema;
  const auto cols = centered_indicators(schema, subset, data.instances);
  const double n = static_cast<double>(data.size());
  const Eigen::Index d = X.cols();
  std::string name = "{";
  for (std::size_t k = 0; k < subset.size(); ++k) name += (k ? "," : "") + subset[k];
  name += "}";
  std::vector<LinearBound> rows;
  for (const auto& [key, z] : cols) {
    LinearBound row;
    row.g = Eigen::VectorXd::Zero(d + 1);
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    row.g.head(d) = X.transpose() * zv / n;
    row.bound = bound;
    row.label = name + "=" + key;
    rows.push_back(std::move(row));
  }
  return rows;
}

FairnessConstraint make_constraint(const FeatureEncoding& encoding, std::vector<std::string> subset,
                                   double bound) {
  const auto& schema = *encoding.schema();
  subset_indices(schema, subset);
  if (!(bound >= 0.0)) throw ValidationError("constraint bound must be non-negative");
  FairnessConstraint c;
  c.attributes = canonical_subset(schema, std::move(subset));
  c.bound = bound;
  for (const auto& name : c.attributes) {
    for (std::size_t k : encoding.coordinates_of(schema.index_of(name))) c.coordinates.push_back(k);
  }
  return c;
}

DecisionFunction train_constrained(const std::string& id, const Dataset& data,
                                   std::shared_ptr<const FeatureEncoding> encoding,
                                   std::vector<FairnessConstraint> constraints, double reg,
                                   const TrainerOptions& options) {
  if (!encoding) throw ValidationError("train_constrained needs an encoding");
  if (data.empty()) throw ValidationError("train_constrained needs data");
  const Eigen::MatrixXd X = encoding->encode_all(data.instances);
  const Eigen::VectorXd y = label_vector(data);
  std::vector<LinearBound> bounds;
  for (auto& c : constraints) {
    c = make_constraint(*encoding, c.attributes, c.bound);
    auto rows = covariance_rows(c.attributes, data, X, c.bound);
    for (auto& r : rows) bounds.push_back(std::move(r));
  }
  TrainerOptions opts = options;
  opts.reg = reg;
  const TrainResult fit = train_penalized(X, y, std::move(bounds), opts);
  MarginClassifier model;
  model.encoding = std::move(encoding);
  const Eigen::Index d = X.cols();
  model.weights = fit.theta.head(d);
  model.intercept = fit.theta[d];
  model.constraints = std::move(constraints);
  model.reg = reg;
  model.training_loss = fit.training_loss;
  return DecisionFunction::make_margin(id, std::move(model));
}

Violation constraint_violation(const DecisionFunction& f, const Dataset& data,
                               const std::vector<std::string>& subset) {
  const auto& model = require_margin(f);
  if (data.empty()) throw ValidationError("constraint_violation needs data");
  const auto& schema = *data.schema;
  const auto cols = centered_indicators(schema, subset, data.instances);
  Violation v;
  if (cols.size() < 2) {
    v.degenerate = true;
    return v;
  }
  std::vector<double> margins;
  margins.reserve(data.size());
  for (const auto& inst : data.instances) margins.push_back(model.margin(inst));
  const double n = static_cast<double>(data.size());
  for (const auto& [key, z] : cols) {
    double cov = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) cov += z[i] * margins[i];
    v.value = std::max(v.value, std::abs(cov / n));
  }
  return v;
}

double default_bound(const DecisionFunction& f, const Dataset& data, double c_scale) {
  const auto& model = require_margin(f);
  if (data.empty()) throw ValidationError("default_bound needs data");
  double sum = 0.0;
  double sq = 0.0;
  for (const auto& inst : data.instances) {
    const double m = model.margin(inst);
    sum += m;
    sq += m * m;
  }
  const double n = static_cast<double>(data.size());
  const double mean = sum / n;
  return c_scale * std::sqrt(std::max(0.0, sq / n - mean * mean));
}

std::vector<std::vector<std::string>> candidate_subsets(const AttributeSchema& schema,
                                                        std::size_t max_size) {
  const auto sensitive = schema.sensitive_categorical();
  std::vector<std::vector<std::string>> out;
  const std::size_t s = sensitive.size();
  for (std::size_t size = 1; size <= std::min(max_size, s); ++size) {
    std::vector<bool> pick(s, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), true);
    do {
      std::vector<std::string> subset;
      for (std::size_t k = 0; k < s; ++k) {
        if (pick[k]) subset.push_back(sensitive[k]);
      }
      out.push_back(std::move(subset));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return out;
}

std::optional<FairnessConstraint> generate_cut(const DecisionFunction& f, const Dataset& data,
                                               const AttributeSchema& schema, double c_default,
                                               std::size_t max_subset_size) {
  const auto& model = require_margin(f);
  const auto subsets = candidate_subsets(schema, max_subset_size);
  std::optional<std::vector<std::string>> best;
  double best_violation = c_default;
  std::size_t best_size = 0;
  for (const auto& subset : subsets) {
    if (best && subset.size() > best_size) break;  // lazy: stop at the first violated size
    const bool constrained =
        std::any_of(model.constraints.begin(), model.constraints.end(),
                    [&](const FairnessConstraint& c) { return c.attributes == subset; });
    if (constrained) continue;
    const Violation v = constraint_violation(f, data, subset);
    if (v.degenerate) continue;
    if (v.value > best_violation) {
      best = subset;
      best_violation = v.value;
      best_size = subset.size();
    }
  }
  if (!best) return std::nullopt;
  return make_constraint(*model.encoding, *best, c_default);
}

EnhancementOutcome enhance_margin(const DecisionFunction& f, const Dataset& data,
                                  const AttributeSchema& schema, const AuditConfig& audit,
                                  const EnhancementConfig& config,
                                  std::optional<double> c_default) {
  const auto& model = require_margin(f);
  config.validate();
  if (data.empty()) throw ValidationError("enhance_margin needs data");
  const std::size_t s = schema.sensitive_categorical().size();
  const std::size_t subset_count = s >= 63 ? SIZE_MAX : (std::size_t{1} << s) - 1;
  const std::size_t cut_limit = std::min(config.max_cuts, subset_count);
  const double c = c_default ? *c_default : default_bound(f, data, config.c_scale);

  EnhancementOutcome out;
  out.function_id = f.id();
  DecisionFunction current = f;
  std::vector<FairnessConstraint> constraints = model.constraints;
  while (true) {
    AuditReport report = audit_function(current, data, schema, audit);
    const double acc = accuracy(current, data);
    out.final_accuracy = acc;
    const bool fair = !report.unfair;
    out.final_audit = std::move(report);
    if (fair) {
      if (acc >= config.accuracy_floor) {
        out.status = EnhancementStatus::enhanced;
        out.function = current;
      } else {
        out.cause = "accuracy " + std::to_string(acc) + " below floor " +
                    std::to_string(config.accuracy_floor);
      }
      return out;
    }
    if (out.cuts.size() >= cut_limit) {
      out.cause = "cut budget exhausted after " + std::to_string(out.cuts.size()) + " cuts";
      return out;
    }
    auto cut = generate_cut(current, data, schema, c, s);
    if (!cut) {
      out.cause = "still unfair but no unconstrained subset exceeds the bound";
      return out;
    }
    constraints.push_back(*cut);
    out.cuts.push_back(std::move(*cut));
    ++out.iterations;
    try {
      current = train_constrained(f.id(), data, model.encoding, constraints, model.reg);
    } catch (const InfeasibleError& e) {
      out.cause = std::string("infeasible: ") + e.what();
      return out;
    }
  }
}

}  // namespace hedgefair

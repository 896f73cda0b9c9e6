#include "hedgefair/fairness_auditor.hpp"

#include <algorithm>
#include <set>

namespace hedgefair {
namespace {

struct FlipAxis {
  std::size_t attr;
  std::vector<std::string> levels;
  std::size_t original;  // index of the instance's own level
};

std::vector<FlipAxis> flip_axes(const Instance& inst, const AttributeSchema& schema,
                                const std::vector<std::string>& attrs, bool allow_non_sensitive) {
  std::set<std::string> seen;
  std::vector<FlipAxis> axes;
  for (const auto& name : attrs) {
    if (!seen.insert(name).second) throw ValidationError("attribute '" + name + "' listed twice");
    const std::size_t a = schema.index_of(name);
    const auto& desc = schema.at(a);
    if (desc.kind != AttributeKind::categorical) {
      throw ValidationError("cannot flip numeric attribute '" + name + "'");
    }
    if (!allow_non_sensitive && !is_sensitive(desc.sensitivity)) {
      throw ValidationError("attribute '" + name + "' is not sensitive");
    }
    FlipAxis axis{a, desc.levels(), 0};
    const std::string& own = desc.level_of(inst.categorical(a));
    axis.original = static_cast<std::size_t>(
        std::find(axis.levels.begin(), axis.levels.end(), own) - axis.levels.begin());
    axes.push_back(std::move(axis));
  }
  // Keep schema order so variant order does not depend on how attrs were listed.
  std::sort(axes.begin(), axes.end(),
            [](const FlipAxis& x, const FlipAxis& y) { return x.attr < y.attr; });
  return axes;
}

std::vector<Instance> enumerate_variants(const Instance& inst, const AttributeSchema& schema,
                                         const std::vector<FlipAxis>& axes) {
  std::vector<Instance> out;
  if (axes.empty()) return out;
  std::vector<std::size_t> digit(axes.size(), 0);
  std::uint64_t serial = 0;
  while (true) {
    bool identity = true;
    for (std::size_t k = 0; k < axes.size(); ++k) identity &= digit[k] == axes[k].original;
    if (!identity) {
      Instance v = inst;
      ++serial;
      if (serial >= (1ULL << 16)) throw ValidationError("too many flip variants");
      v.id = kSyntheticIdBit | (inst.id << 16) | serial;
      for (std::size_t k = 0; k < axes.size(); ++k) {
        if (digit[k] == axes[k].original) continue;
        const auto& desc = schema.at(axes[k].attr);
        v.values[axes[k].attr] = desc.value_for_level(axes[k].levels[digit[k]]);
      }
      out.push_back(std::move(v));
    }
    std::size_t k = axes.size();
    while (k > 0) {
      --k;
      if (++digit[k] < axes[k].levels.size()) break;
      digit[k] = 0;
      if (k == 0) return out;
    }
  }
}

std::vector<FlipFinding> findings_for(const DecisionFunction& f, const Instance& inst,
                                      Label base, const AttributeSchema& schema,
                                      const std::vector<Instance>& variants) {
  std::vector<FlipFinding> out;
  for (const auto& v : variants) {
    const Label l = f.evaluate(v);
    if (l == base) continue;
    FlipFinding finding{f.id(), inst.id, {}, base, l};
    for (std::size_t a = 0; a < schema.size(); ++a) {
      if (v.values[a] != inst.values[a]) finding.flipped.push_back(schema.at(a).name);
    }
    out.push_back(std::move(finding));
  }
  return out;
}

void require_sensitive_categorical(const AttributeSchema& schema, const std::string& attr) {
  const auto& desc = schema.at(schema.index_of(attr));
  if (desc.kind != AttributeKind::categorical || !is_sensitive(desc.sensitivity)) {
    throw ValidationError("parity audits need a sensitive categorical attribute, got '" + attr +
                          "'");
  }
}

bool matches(const AttributeSchema& schema, const Instance& inst, const Condition& c,
             std::size_t attr) {
  const auto& desc = schema.at(attr);
  if (desc.kind == AttributeKind::numeric) {
    const double x = inst.numeric(attr);
    return x >= c.lo && x <= c.hi;
  }
  if (!c.equals) return true;
  const std::string& raw = inst.categorical(attr);
  return raw == *c.equals || (desc.grouping && desc.level_of(raw) == *c.equals);
}

}  // namespace

void AuditConfig::validate() const {
  if (cadence == 0) throw ValidationError("audit cadence must be positive");
  if (window == 0) throw ValidationError("audit window must be positive");
  if (!(parity_threshold >= 0.0 && parity_threshold <= 1.0)) {
    throw ValidationError("parity threshold must lie in [0, 1]");
  }
  if (!(flip_rate_threshold >= 0.0 && flip_rate_threshold <= 1.0)) {
    throw ValidationError("flip-rate threshold must lie in [0, 1]");
  }
  if (flip_cap == 0) throw ValidationError("flip cap must be positive");
  if (flip_stride == 0) throw ValidationError("flip stride must be positive");
}

std::vector<Instance> flip_variants(const Instance& inst, const AttributeSchema& schema,
                                    const std::vector<std::string>& attrs, std::size_t cap) {
  if (attrs.size() > cap) {
    throw ValidationError("flip test over " + std::to_string(attrs.size()) +
                          " attributes exceeds the cap of " + std::to_string(cap));
  }
  validate_instance(schema, inst);
  return enumerate_variants(inst, schema, flip_axes(inst, schema, attrs, false));
}

std::vector<FlipFinding> flip_test(const DecisionFunction& f, const Instance& inst,
                                   const AttributeSchema& schema,
                                   const std::vector<std::string>& attrs, std::size_t cap) {
  const auto variants = flip_variants(inst, schema, attrs, cap);
  return findings_for(f, inst, f.evaluate(inst), schema, variants);
}

std::vector<FlipFinding> diagnostic_flip_test(const DecisionFunction& f, const Instance& inst,
                                              const AttributeSchema& schema,
                                              const std::vector<std::string>& attrs) {
  validate_instance(schema, inst);
  const auto variants = enumerate_variants(inst, schema, flip_axes(inst, schema, attrs, true));
  return findings_for(f, inst, f.evaluate(inst), schema, variants);
}

std::vector<Label> evaluate_all(const DecisionFunction& f, const std::vector<Instance>& instances) {
  std::vector<Label> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(f.evaluate(inst));
  return out;
}

ParityReport parity_from_labels(const std::string& function_id, const AttributeSchema& schema,
                                const std::vector<Instance>& instances,
                                const std::vector<Label>& labels, const std::string& attr,
                                double threshold, std::size_t min_support) {
  require_sensitive_categorical(schema, attr);
  const std::size_t a = schema.index_of(attr);
  const auto& desc = schema.at(a);
  ParityReport report;
  report.function_id = function_id;
  report.attribute = attr;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto& g = report.groups[desc.level_of(instances[i].categorical(a))];
    ++g.total;
    if (labels[i] == Label::accept) ++g.accepted;
  }
  double lo = 1.0;
  double hi = 0.0;
  std::size_t eligible = 0;
  for (auto& [level, g] : report.groups) {
    g.rate = static_cast<double>(g.accepted) / static_cast<double>(g.total);
    if (g.total < min_support) continue;
    ++eligible;
    lo = std::min(lo, g.rate);
    hi = std::max(hi, g.rate);
  }
  if (eligible == 0) {
    report.low_support = true;
  } else if (eligible == 1) {
    report.gap = 0.0;
    report.low_support = true;
  } else {
    report.gap = hi - lo;
    report.unfair = *report.gap > threshold;
  }
  return report;
}

ParityReport parity_audit(const DecisionFunction& f, const Dataset& data, const std::string& attr,
                          double threshold, std::size_t min_support) {
  if (!data.schema) throw ValidationError("dataset has no schema");
  return parity_from_labels(f.id(), *data.schema, data.instances, evaluate_all(f, data.instances),
                            attr, threshold, min_support);
}

ParityReport conditioned_parity_audit(const DecisionFunction& f, const Dataset& data,
                                      const std::string& attr,
                                      const std::vector<Condition>& conditioning, double threshold,
                                      std::size_t min_support) {
  if (!data.schema) throw ValidationError("dataset has no schema");
  const auto& schema = *data.schema;
  std::vector<std::size_t> idx;
  for (const auto& c : conditioning) idx.push_back(schema.index_of(c.attribute));
  std::vector<Instance> subset;
  for (const auto& inst : data.instances) {
    bool keep = true;
    for (std::size_t k = 0; k < conditioning.size() && keep; ++k) {
      keep = matches(schema, inst, conditioning[k], idx[k]);
    }
    if (keep) subset.push_back(inst);
  }
  return parity_from_labels(f.id(), schema, subset, evaluate_all(f, subset), attr, threshold,
                            min_support);
}

AuditReport audit_function(const DecisionFunction& f, const Dataset& data,
                           const AttributeSchema& schema, const AuditConfig& config) {
  config.validate();
  AuditReport report;
  report.function_id = f.id();
  report.window_size = data.size();
  if (data.empty()) {
    report.low_support = true;
    return report;
  }
  const auto labels = evaluate_all(f, data.instances);
  const auto sensitive = schema.sensitive_categorical();
  for (const auto& attr : sensitive) {
    auto p = parity_from_labels(f.id(), schema, data.instances, labels, attr,
                                config.parity_threshold, config.min_support);
    if (p.unfair) report.reasons.push_back("parity gap on " + attr);
    report.parity.push_back(std::move(p));
  }
  report.low_support = std::all_of(report.parity.begin(), report.parity.end(),
                                   [](const ParityReport& p) { return p.low_support; });

  // Flip sets: all sensitive attributes together, or every subset of cap size.
  std::vector<std::vector<std::string>> flip_sets;
  if (sensitive.size() <= config.flip_cap) {
    if (!sensitive.empty()) flip_sets.push_back(sensitive);
  } else {
    std::vector<bool> pick(sensitive.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(config.flip_cap), true);
    do {
      std::vector<std::string> set;
      for (std::size_t k = 0; k < sensitive.size(); ++k) {
        if (pick[k]) set.push_back(sensitive[k]);
      }
      flip_sets.push_back(std::move(set));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }

  for (std::size_t i = 0; i < data.size(); i += config.flip_stride) {
    const auto& inst = data.instances[i];
    bool failed = false;
    for (const auto& set : flip_sets) {
      const auto variants = enumerate_variants(inst, schema, flip_axes(inst, schema, set, false));
      auto found = findings_for(f, inst, labels[i], schema, variants);
      failed |= !found.empty();
      for (auto& x : found) report.flip_findings.push_back(std::move(x));
    }
    if (!config.diagnostic_attributes.empty()) {
      const auto variants = enumerate_variants(
          inst, schema, flip_axes(inst, schema, config.diagnostic_attributes, true));
      report.diagnostic_findings += findings_for(f, inst, labels[i], schema, variants).size();
    }
    ++report.flip_tested;
    if (failed) ++report.flip_failed;
  }
  if (report.flip_tested > 0) {
    report.flip_rate =
        static_cast<double>(report.flip_failed) / static_cast<double>(report.flip_tested);
  }
  if (report.flip_rate > config.flip_rate_threshold) {
    report.reasons.push_back("flip-test failure rate " + std::to_string(report.flip_rate));
  }
  report.unfair = !report.reasons.empty();
  return report;
}

}  // namespace hedgefair

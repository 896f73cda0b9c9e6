#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hedgefair/decision_function.hpp"

namespace hedgefair {

/// A counterfactual variant that received a different label than its base.
struct FlipFinding {
  std::string function_id;
  std::uint64_t base_id = 0;
  std::vector<std::string> flipped;  // attribute names that differ
  Label base_label = Label::reject;
  Label variant_label = Label::reject;
};

struct GroupRate {
  std::size_t accepted = 0;
  std::size_t total = 0;
  double rate = 0.0;
};

struct ParityReport {
  std::string function_id;
  std::string attribute;
  std::map<std::string, GroupRate> groups;
  std::optional<double> gap;  // undefined when no group has enough support
  bool low_support = false;   // fewer than two groups met min_support
  bool unfair = false;
};

struct AuditConfig {
  std::size_t cadence = 50;
  std::size_t window = 500;
  double parity_threshold = 0.1;
  std::size_t min_support = 20;
  double flip_rate_threshold = 0.05;
  std::size_t flip_cap = 2;
  std::size_t flip_stride = 1;  // flip-test every k-th instance of the window
  /// Non-sensitive categorical attributes probed for absurd behavior.
  /// Findings are reported but never make a function unfair.
  std::vector<std::string> diagnostic_attributes;

  void validate() const;
};

struct AuditReport {
  std::string function_id;
  std::vector<ParityReport> parity;
  std::vector<FlipFinding> flip_findings;
  std::size_t flip_tested = 0;         // instances flip-tested
  std::size_t flip_failed = 0;         // instances with at least one finding
  double flip_rate = 0.0;              // flip_failed / flip_tested
  std::size_t diagnostic_findings = 0;
  std::size_t window_size = 0;
  bool low_support = false;
  bool unfair = false;
  std::vector<std::string> reasons;
};

/// Ids of synthetic variants set this bit.
inline constexpr std::uint64_t kSyntheticIdBit = 1ULL << 63;

/// All instances that agree with `inst` except on a nonempty subset of
/// `attrs`, where each changed attribute takes another level (its
/// representative value, for grouped attributes).
std::vector<Instance> flip_variants(const Instance& inst, const AttributeSchema& schema,
                                    const std::vector<std::string>& attrs,
                                    std::size_t cap = 2);

/// One finding per variant whose label differs from f(inst).
std::vector<FlipFinding> flip_test(const DecisionFunction& f, const Instance& inst,
                                   const AttributeSchema& schema,
                                   const std::vector<std::string>& attrs, std::size_t cap = 2);

/// Like flip_test but for non-sensitive categorical attributes.
std::vector<FlipFinding> diagnostic_flip_test(const DecisionFunction& f, const Instance& inst,
                                              const AttributeSchema& schema,
                                              const std::vector<std::string>& attrs);

/// Statistical parity gap of f's acceptance rate across the levels of attr.
ParityReport parity_audit(const DecisionFunction& f, const Dataset& data, const std::string& attr,
                          double threshold, std::size_t min_support);

/// Restriction of a parity audit to a sub-population.
struct Condition {
  std::string attribute;
  std::optional<std::string> equals;  // categorical value (or group label)
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();  // numeric range [lo, hi]

  static Condition equal(std::string attr, std::string value) {
    Condition c;
    c.attribute = std::move(attr);
    c.equals = std::move(value);
    return c;
  }
  static Condition range(std::string attr, double lo, double hi) {
    Condition c;
    c.attribute = std::move(attr);
    c.lo = lo;
    c.hi = hi;
    return c;
  }
};

ParityReport conditioned_parity_audit(const DecisionFunction& f, const Dataset& data,
                                      const std::string& attr,
                                      const std::vector<Condition>& conditioning, double threshold,
                                      std::size_t min_support);

/// Parity audits over every sensitive categorical attribute plus flip tests
/// over the dataset, aggregated into one verdict.
AuditReport audit_function(const DecisionFunction& f, const Dataset& data,
                           const AttributeSchema& schema, const AuditConfig& config);

/// Labels of f over data, in instance order; shared by audits that need them twice.
std::vector<Label> evaluate_all(const DecisionFunction& f, const std::vector<Instance>& instances);

/// Parity report computed from precomputed labels.
ParityReport parity_from_labels(const std::string& function_id, const AttributeSchema& schema,
                                const std::vector<Instance>& instances,
                                const std::vector<Label>& labels, const std::string& attr,
                                double threshold, std::size_t min_support);

}  // namespace hedgefair

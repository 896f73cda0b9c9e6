#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hedgefair/decision_function.hpp"
#include "hedgefair/fairness_auditor.hpp"
#include "hedgefair/margin_trainer.hpp"

namespace hedgefair {

enum class EnhancementStatus { enhanced, reported_upstream, failed };

const char* to_string(EnhancementStatus s);

struct EnhancementConfig {
  bool enabled = true;
  std::size_t max_cuts = 3;
  double accuracy_floor = 0.6;
  double c_scale = 0.01;  // default bound = c_scale * sd(margins on the training set)
  double reg = 1e-3;

  void validate() const;
};

struct EnhancementOutcome {
  std::string function_id;
  EnhancementStatus status = EnhancementStatus::failed;
  std::optional<DecisionFunction> function;  // set iff enhanced
  std::vector<FairnessConstraint> cuts;
  std::size_t iterations = 0;
  std::optional<AuditReport> final_audit;
  std::optional<double> final_accuracy;
  std::string cause;  // why the outcome is not "enhanced"
  bool degenerate = false;
};

/// Functions the framework cannot modify are retired and reported.
EnhancementOutcome report_uncontrollable(const DecisionFunction& f);

struct RetrainResult {
  DecisionFunction function;
  bool degenerate = false;
};

/// Refits a black box on base_training plus its mistakes; a mistake replaces
/// any base row with the same instance id.
RetrainResult retrain_blackbox(const DecisionFunction& f, const Dataset& base_training,
                               const std::vector<std::pair<Instance, GroundTruthEntry>>& mistakes);

/// Retrains a black box on its mistakes (if any), audits the result on
/// audit_data and checks its accuracy on `labeled` against the floor.
EnhancementOutcome enhance_blackbox(
    const DecisionFunction& f, const std::vector<std::pair<Instance, GroundTruthEntry>>& mistakes,
    const Dataset& audit_data, const Dataset& labeled, const AuditConfig& audit,
    const EnhancementConfig& config);

/// Group-indicator covariance rows of one constraint subset over a dataset:
/// one row per joint level combination of the subset's attributes present in
/// the data. Row k satisfies g_k . [w; b] = cov(1[combo k], margin).
std::vector<LinearBound> covariance_rows(const std::vector<std::string>& subset,
                                         const Dataset& data, const Eigen::MatrixXd& X,
                                         double bound);

/// Margin classifier minimizing average logistic loss + reg |w|^2 subject to
/// every constraint. Throws InfeasibleError when the penalty loop fails.
DecisionFunction train_constrained(const std::string& id, const Dataset& data,
                                   std::shared_ptr<const FeatureEncoding> encoding,
                                   std::vector<FairnessConstraint> constraints, double reg,
                                   const TrainerOptions& options = {});

struct Violation {
  double value = 0.0;
  bool degenerate = false;  // the subset's indicator is constant over the data
};

/// max over joint level combinations of S of |cov(1[combo], margin)|.
Violation constraint_violation(const DecisionFunction& f, const Dataset& data,
                               const std::vector<std::string>& subset);

/// Makes a constraint over the given subset with encoded coordinates filled in.
FairnessConstraint make_constraint(const FeatureEncoding& encoding,
                                   std::vector<std::string> subset, double bound);

/// Default bound: c_scale * standard deviation of f's margins over data.
double default_bound(const DecisionFunction& f, const Dataset& data, double c_scale);

/// Scans unconstrained subsets of sensitive attributes by size, then
/// lexicographically, and returns a cut for the most violated subset of the
/// smallest size that has any violation above c_default.
std::optional<FairnessConstraint> generate_cut(const DecisionFunction& f, const Dataset& data,
                                               const AttributeSchema& schema, double c_default,
                                               std::size_t max_subset_size = 4);

/// Cut-generation loop: audit, add the most violated cut, retrain, repeat.
EnhancementOutcome enhance_margin(const DecisionFunction& f, const Dataset& data,
                                  const AttributeSchema& schema, const AuditConfig& audit,
                                  const EnhancementConfig& config,
                                  std::optional<double> c_default = std::nullopt);

/// Subsets of the sensitive categorical attributes, by size then lexicographic
/// in schema order, up to max_size.
std::vector<std::vector<std::string>> candidate_subsets(const AttributeSchema& schema,
                                                        std::size_t max_size);

}  // namespace hedgefair

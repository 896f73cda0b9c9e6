#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hedgefair/core.hpp"
#include "hedgefair/encoding.hpp"
#include "hedgefair/rule.hpp"

namespace hedgefair {

enum class FunctionKind { fixed_rule, retrainable_blackbox, constrained_margin };

const char* to_string(FunctionKind kind);
FunctionKind function_kind_from_string(const std::string& s);

/// Bound on the covariance between the joint group indicator of a subset of
/// sensitive attributes and the signed margin.
struct FairnessConstraint {
  std::vector<std::string> attributes;  // schema order, nonempty, all sensitive
  double bound = 0.0;
  std::vector<std::size_t> coordinates;  // encoded coordinates of those attributes

  std::string label() const;
  bool same_subset(const FairnessConstraint& other) const {
    return attributes == other.attributes;
  }
};

/// Accepts iff the rule holds.
struct FixedRule {
  RuleExpr expr;
};

/// Opaque retrainable classifier. Callers can only fit it and query labels;
/// its internals stay hidden from the enhancer.
class RetrainableBlackBox {
 public:
  static RetrainableBlackBox fit(std::shared_ptr<const Dataset> training, double reg = 1e-3);

  Label predict(const Instance& inst) const;

  /// Training set had a single class; the box answers the majority label.
  bool degenerate() const { return constant_.has_value(); }
  const std::shared_ptr<const Dataset>& training_set() const { return training_; }
  double reg() const { return reg_; }

 private:
  std::shared_ptr<const Dataset> training_;
  double reg_ = 1e-3;
  std::shared_ptr<const FeatureEncoding> encoding_;
  Eigen::VectorXd weights_;
  double intercept_ = 0.0;
  std::optional<Label> constant_;
};

/// Linear margin classifier x . w + b; accepts iff the margin is >= 0.
struct MarginClassifier {
  std::shared_ptr<const FeatureEncoding> encoding;
  Eigen::VectorXd weights;
  double intercept = 0.0;
  std::vector<FairnessConstraint> constraints;
  double reg = 1e-3;
  double training_loss = 0.0;

  double margin(const Instance& inst) const;
};

class DecisionFunction {
 public:
  static DecisionFunction make_rule(std::string id, SchemaPtr schema, const std::string& rule);
  static DecisionFunction make_blackbox(std::string id, RetrainableBlackBox box);
  static DecisionFunction make_margin(std::string id, MarginClassifier model);

  const std::string& id() const { return id_; }
  FunctionKind kind() const;
  const SchemaPtr& schema() const { return schema_; }

  /// Validates the instance against the schema, then applies the function.
  Label evaluate(const Instance& inst) const;

  const FixedRule* rule() const { return std::get_if<FixedRule>(&impl_); }
  const RetrainableBlackBox* blackbox() const { return std::get_if<RetrainableBlackBox>(&impl_); }
  const MarginClassifier* margin_model() const { return std::get_if<MarginClassifier>(&impl_); }

  /// Short human-readable description of the parameters.
  std::string describe() const;

 private:
  DecisionFunction(std::string id, SchemaPtr schema,
                   std::variant<FixedRule, RetrainableBlackBox, MarginClassifier> impl);

  std::string id_;
  SchemaPtr schema_;
  std::variant<FixedRule, RetrainableBlackBox, MarginClassifier> impl_;
};

inline Label evaluate(const DecisionFunction& f, const Instance& inst) { return f.evaluate(inst); }

/// True iff f(i) differs from the desired label. Throws on id mismatch.
bool accuracy_error(const DecisionFunction& f, const Instance& inst, const GroundTruthEntry& entry);

/// Fraction of labeled instances on which f agrees with the desired label.
double accuracy(const DecisionFunction& f, const Dataset& data);

/// Training labels (desired field of every truth) as a 0/1 vector.
/// Throws if any instance lacks a truth.
Eigen::VectorXd label_vector(const Dataset& data);

}  // namespace hedgefair

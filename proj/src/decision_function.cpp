#include "hedgefair/decision_function.hpp"

#include <sstream>

#include "hedgefair/margin_trainer.hpp"

namespace hedgefair {

const char* to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::fixed_rule:
      return "fixed_rule";
    case FunctionKind::retrainable_blackbox:
      return "retrainable_blackbox";
    case FunctionKind::constrained_margin:
      return "constrained_margin";
  }
  return "?";
}

FunctionKind function_kind_from_string(const std::string& s) {
  if (s == "fixed_rule") return FunctionKind::fixed_rule;
  if (s == "retrainable_blackbox") return FunctionKind::retrainable_blackbox;
  if (s == "constrained_margin") return FunctionKind::constrained_margin;
  throw ValidationError("unknown function kind '" + s + "'");
}

std::string FairnessConstraint::label() const {
  std::string out = "{";
  for (std::size_t k = 0; k < attributes.size(); ++k) {
    if (k) out += ",";
    out += attributes[k];
  }
  return out + "}";
}

Eigen::VectorXd label_vector(const Dataset& data) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto* t = data.truth_for(data.instances[i].id);
    if (t == nullptr) {
      throw ValidationError("instance " + std::to_string(data.instances[i].id) +
                            " has no label");
    }
    y[static_cast<Eigen::Index>(i)] = to_int(t->desired);
  }
  return y;
}

RetrainableBlackBox RetrainableBlackBox::fit(std::shared_ptr<const Dataset> training, double reg) {
  if (!training || training->empty()) throw ValidationError("black box needs training data");
  RetrainableBlackBox box;
  box.training_ = training;
  box.reg_ = reg;
  const Eigen::VectorXd y = label_vector(*training);
  const double positives = y.sum();
  if (positives == 0.0 || positives == static_cast<double>(y.size())) {
    box.constant_ = positives == 0.0 ? Label::reject : Label::accept;
    return box;
  }
  box.encoding_ = std::make_shared<const FeatureEncoding>(
      FeatureEncoding::fit(training->schema, training->instances));
  const Eigen::MatrixXd X = box.encoding_->encode_all(training->instances);
  TrainerOptions opts;
  opts.reg = reg;
  const TrainResult fit = train_penalized(X, y, {}, opts);
  const Eigen::Index d = X.cols();
  box.weights_ = fit.theta.head(d);
  box.intercept_ = fit.theta[d];
  return box;
}

Label RetrainableBlackBox::predict(const Instance& inst) const {
  if (constant_) return *constant_;
  const double m = encoding_->encode(inst).dot(weights_) + intercept_;
  return m >= 0.0 ? Label::accept : Label::reject;
}

double MarginClassifier::margin(const Instance& inst) const {
  return encoding->encode(inst).dot(weights) + intercept;
}

DecisionFunction::DecisionFunction(std::string id, SchemaPtr schema,
                                   std::variant<FixedRule, RetrainableBlackBox, MarginClassifier> impl)
    : id_(std::move(id)), schema_(std::move(schema)), impl_(std::move(impl)) {
  if (id_.empty()) throw ValidationError("decision function needs an id");
  if (!schema_) throw ValidationError("decision function needs a schema");
}

DecisionFunction DecisionFunction::make_rule(std::string id, SchemaPtr schema,
                                             const std::string& rule) {
  if (!schema) throw ValidationError("decision function needs a schema");
  FixedRule r{RuleExpr::parse(rule, *schema)};
  return DecisionFunction(std::move(id), std::move(schema), std::move(r));
}

DecisionFunction DecisionFunction::make_blackbox(std::string id, RetrainableBlackBox box) {
  SchemaPtr schema = box.training_set()->schema;
  return DecisionFunction(std::move(id), std::move(schema), std::move(box));
}

DecisionFunction DecisionFunction::make_margin(std::string id, MarginClassifier model) {
  if (!model.encoding) throw ValidationError("margin classifier needs an encoding");
  if (static_cast<std::size_t>(model.weights.size()) != model.encoding->dimension()) {
    throw ValidationError("margin classifier needs one coefficient per encoded feature");
  }
  SchemaPtr schema = model.encoding->schema();
  return DecisionFunction(std::move(id), std::move(schema), std::move(model));
}

FunctionKind DecisionFunction::kind() const {
  switch (impl_.index()) {
    case 0:
      return FunctionKind::fixed_rule;
    case 1:
      return FunctionKind::retrainable_blackbox;
    default:
      return FunctionKind::constrained_margin;
  }
}

Label DecisionFunction::evaluate(const Instance& inst) const {
  validate_instance(*schema_, inst);
  if (const auto* r = rule()) {
    return r->expr.holds(*schema_, inst) ? Label::accept : Label::reject;
  }
  if (const auto* b = blackbox()) return b->predict(inst);
  return margin_model()->margin(inst) >= 0.0 ? Label::accept : Label::reject;
}

std::string DecisionFunction::describe() const {
  std::ostringstream os;
  if (const auto* r = rule()) {
    os << "rule: " << r->expr.source();
  } else if (const auto* b = blackbox()) {
    os << "black box trained on " << b->training_set()->size() << " rows";
    if (b->degenerate()) os << " (degenerate)";
  } else {
    const auto* m = margin_model();
    os << "margin classifier, " << m->weights.size() << " features, " << m->constraints.size()
       << " constraints";
  }
  return os.str();
}

bool accuracy_error(const DecisionFunction& f, const Instance& inst,
                    const GroundTruthEntry& entry) {
  if (inst.id != entry.instance_id) {
    throw ValidationError("ground truth entry " + std::to_string(entry.instance_id) +
                          " does not belong to instance " + std::to_string(inst.id));
  }
  return f.evaluate(inst) != entry.desired;
}

double accuracy(const DecisionFunction& f, const Dataset& data) {
  std::size_t labeled = 0;
  std::size_t correct = 0;
  for (const auto& inst : data.instances) {
    const auto* t = data.truth_for(inst.id);
    if (t == nullptr) continue;
    ++labeled;
    if (!accuracy_error(f, inst, *t)) ++correct;
  }
  if (labeled == 0) throw ValidationError("accuracy needs labeled instances");
  return static_cast<double>(correct) / static_cast<double>(labeled);
}

}  // namespace hedgefair

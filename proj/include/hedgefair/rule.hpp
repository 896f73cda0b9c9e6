#pragma once

#include <string>
#include <vector>

#include "hedgefair/core.hpp"

namespace hedgefair {

enum class CompareOp { eq, ne, lt, le, gt, ge };

/// Single-attribute predicate. Categorical predicates compare against a raw
/// value or, for grouped attributes, against a group label.
struct Predicate {
  std::size_t attr = 0;
  CompareOp op = CompareOp::eq;
  double number = 0.0;
  std::string category;
  bool matches_group = false;

  bool holds(const AttributeSchema& schema, const Instance& inst) const;
};

/// Disjunction of conjunctions of predicates. An empty conjunction is true;
/// an empty disjunction is false.
///
/// Text form: `school >= 12 AND gender == F OR city == NYC`, where AND binds
/// tighter than OR; `true` and `false` are constants.
class RuleExpr {
 public:
  static RuleExpr parse(const std::string& text, const AttributeSchema& schema);

  bool holds(const AttributeSchema& schema, const Instance& inst) const;

  const std::string& source() const { return source_; }
  /// Attribute indices the rule reads.
  std::vector<std::size_t> attributes() const;

 private:
  std::string source_;
  std::vector<std::vector<Predicate>> clauses_;
};

}  // namespace hedgefair

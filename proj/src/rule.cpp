#include "hedgefair/rule.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace hedgefair {
namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
           c == '+';
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (is_word(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word(text[j])) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
    } else if (c == '&' || c == '|' || c == '=' || c == '!' || c == '<' || c == '>') {
      std::size_t j = i + 1;
      if (j < text.size() && (text[j] == '=' || text[j] == c)) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
    } else {
      throw ValidationError("unexpected character '" + std::string(1, c) + "' in rule '" +
                            text + "'");
    }
  }
  return out;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool is_and(const std::string& t) { return upper(t) == "AND" || t == "&&"; }
bool is_or(const std::string& t) { return upper(t) == "OR" || t == "||"; }

CompareOp parse_op(const std::string& t, const std::string& rule) {
  if (t == "==" || t == "=") return CompareOp::eq;
  if (t == "!=") return CompareOp::ne;
  if (t == "<") return CompareOp::lt;
  if (t == "<=") return CompareOp::le;
  if (t == ">") return CompareOp::gt;
  if (t == ">=") return CompareOp::ge;
  throw ValidationError("unknown operator '" + t + "' in rule '" + rule + "'");
}

bool compare(double a, CompareOp op, double b) {
  switch (op) {
    case CompareOp::eq:
      return a == b;
    case CompareOp::ne:
      return a != b;
    case CompareOp::lt:
      return a < b;
    case CompareOp::le:
      return a <= b;
    case CompareOp::gt:
      return a > b;
    case CompareOp::ge:
      return a >= b;
  }
  return false;
}

}  // namespace

bool Predicate::holds(const AttributeSchema& schema, const Instance& inst) const {
  const auto& desc = schema.at(attr);
  if (desc.kind == AttributeKind::numeric) return compare(inst.numeric(attr), op, number);
  const std::string& raw = inst.categorical(attr);
  const std::string& lhs = matches_group ? desc.level_of(raw) : raw;
  return op == CompareOp::eq ? lhs == category : lhs != category;
}

RuleExpr RuleExpr::parse(const std::string& text, const AttributeSchema& schema) {
  RuleExpr expr;
  expr.source_ = text;
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw ValidationError("empty rule");

  std::vector<Predicate> clause;
  bool clause_false = false;
  std::size_t i = 0;
  auto close_clause = [&] {
    if (!clause_false) expr.clauses_.push_back(clause);
    clause.clear();
    clause_false = false;
  };
  while (true) {
    if (i >= tokens.size()) throw ValidationError("truncated rule '" + text + "'");
    const std::string& head = tokens[i];
    if (upper(head) == "TRUE") {
      ++i;
    } else if (upper(head) == "FALSE") {
      clause_false = true;
      ++i;
    } else {
      if (i + 2 >= tokens.size()) {
        throw ValidationError("truncated predicate in rule '" + text + "'");
      }
      Predicate p;
      p.attr = schema.index_of(head);
      p.op = parse_op(tokens[i + 1], text);
      const std::string& value = tokens[i + 2];
      const auto& desc = schema.at(p.attr);
      if (desc.kind == AttributeKind::numeric) {
        const char* first = value.data();
        const char* last = value.data() + value.size();
        auto [ptr, ec] = std::from_chars(first, last, p.number);
        if (ec != std::errc() || ptr != last) {
          throw ValidationError("'" + desc.name + "' needs a numeric operand, got '" + value +
                                "'");
        }
      } else {
        if (p.op != CompareOp::eq && p.op != CompareOp::ne) {
          throw ValidationError("categorical attribute '" + desc.name +
                                "' supports only == and !=");
        }
        p.category = value;
        if (!desc.has_value(value)) {
          const auto groups = desc.grouping ? desc.grouping->groups() : std::vector<std::string>{};
          if (std::find(groups.begin(), groups.end(), value) == groups.end()) {
            throw ValidationError("unknown value '" + value + "' for attribute '" + desc.name +
                                  "'");
          }
          p.matches_group = true;
        }
      }
      clause.push_back(std::move(p));
      i += 3;
    }
    if (i == tokens.size()) {
      close_clause();
      break;
    }
    if (is_and(tokens[i])) {
      ++i;
    } else if (is_or(tokens[i])) {
      close_clause();
      ++i;
    } else {
      throw ValidationError("expected AND/OR before '" + tokens[i] + "' in rule '" + text + "'");
    }
  }
  return expr;
}

bool RuleExpr::holds(const AttributeSchema& schema, const Instance& inst) const {
  return std::any_of(clauses_.begin(), clauses_.end(), [&](const auto& clause) {
    return std::all_of(clause.begin(), clause.end(),
                       [&](const Predicate& p) { return p.holds(schema, inst); });
  });
}

std::vector<std::size_t> RuleExpr::attributes() const {
  std::set<std::size_t> out;
  for (const auto& clause : clauses_) {
    for (const auto& p : clause) out.insert(p.attr);
  }
  return {out.begin(), out.end()};
}

}  // namespace hedgefair

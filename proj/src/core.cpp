#include "hedgefair/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hedgefair {

const char* to_string(AttributeKind kind) {
  return kind == AttributeKind::numeric ? "numeric" : "categorical";
}

const char* to_string(Sensitivity s) {
  switch (s) {
    case Sensitivity::non_sensitive:
      return "non_sensitive";
    case Sensitivity::explicit_sensitive:
      return "explicit_sensitive";
    case Sensitivity::implicit_sensitive:
      return "implicit_sensitive";
  }
  return "?";
}

Sensitivity sensitivity_from_string(const std::string& s) {
  if (s == "non_sensitive") return Sensitivity::non_sensitive;
  if (s == "explicit_sensitive") return Sensitivity::explicit_sensitive;
  if (s == "implicit_sensitive") return Sensitivity::implicit_sensitive;
  throw ValidationError("unknown sensitivity class '" + s + "'");
}

std::vector<std::string> ValueGrouping::groups() const {
  std::set<std::string> g;
  for (const auto& [value, group] : group_of) g.insert(group);
  return {g.begin(), g.end()};
}

const std::string& ValueGrouping::representative(const std::string& group) const {
  // group_of is ordered by value, so the first hit is the smallest value.
  for (const auto& [value, g] : group_of) {
    if (g == group) return value;
  }
  throw SchemaError("unknown group '" + group + "'");
}

bool AttributeDescriptor::has_value(const std::string& v) const {
  return std::find(values.begin(), values.end(), v) != values.end();
}

const std::string& AttributeDescriptor::level_of(const std::string& value) const {
  if (!grouping) return value;
  auto it = grouping->group_of.find(value);
  if (it == grouping->group_of.end()) {
    throw SchemaError("value '" + value + "' of attribute '" + name + "' has no group");
  }
  return it->second;
}

std::vector<std::string> AttributeDescriptor::levels() const {
  return grouping ? grouping->groups() : values;
}

const std::string& AttributeDescriptor::value_for_level(const std::string& level) const {
  if (grouping) return grouping->representative(level);
  auto it = std::find(values.begin(), values.end(), level);
  if (it == values.end()) throw SchemaError("unknown level '" + level + "' for '" + name + "'");
  return *it;
}

AttributeSchema::AttributeSchema(std::vector<AttributeDescriptor> attributes)
    : attributes_(std::move(attributes)) {
  std::set<std::string> names;
  bool any_non_sensitive = false;
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw ValidationError("attribute with empty name");
    if (!names.insert(a.name).second) {
      throw ValidationError("duplicate attribute name '" + a.name + "'");
    }
    if (a.kind == AttributeKind::categorical) {
      if (a.values.empty()) {
        throw ValidationError("categorical attribute '" + a.name + "' has no values");
      }
      std::set<std::string> uniq(a.values.begin(), a.values.end());
      if (uniq.size() != a.values.size()) {
        throw ValidationError("categorical attribute '" + a.name + "' has duplicate values");
      }
      if (a.grouping) {
        for (const auto& v : a.values) {
          if (!a.grouping->group_of.contains(v)) {
            throw ValidationError("value '" + v + "' of '" + a.name + "' is not grouped");
          }
        }
      }
    } else if (a.grouping) {
      throw ValidationError("numeric attribute '" + a.name + "' cannot be grouped");
    }
    if (!is_sensitive(a.sensitivity)) any_non_sensitive = true;
  }
  if (!any_non_sensitive) {
    throw ValidationError("schema needs at least one non-sensitive attribute");
  }
}

std::optional<std::size_t> AttributeSchema::find(const std::string& name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t AttributeSchema::index_of(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw SchemaError("unknown attribute '" + name + "'");
}

std::vector<std::string> AttributeSchema::sensitive_categorical() const {
  std::vector<std::string> out;
  for (const auto& a : attributes_) {
    if (is_sensitive(a.sensitivity) && a.kind == AttributeKind::categorical) out.push_back(a.name);
  }
  return out;
}

void validate_instance(const AttributeSchema& schema, const Instance& instance) {
  if (instance.values.size() != schema.size()) {
    throw SchemaError("instance " + std::to_string(instance.id) + " has " +
                      std::to_string(instance.values.size()) + " values, schema expects " +
                      std::to_string(schema.size()));
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto& attr = schema.at(k);
    const auto& v = instance.values[k];
    if (attr.kind == AttributeKind::numeric) {
      const double* x = std::get_if<double>(&v);
      if (x == nullptr) throw SchemaError("attribute '" + attr.name + "' expects a number");
      if (!std::isfinite(*x)) throw SchemaError("attribute '" + attr.name + "' is not finite");
    } else {
      const std::string* s = std::get_if<std::string>(&v);
      if (s == nullptr) throw SchemaError("attribute '" + attr.name + "' expects a category");
      if (!attr.has_value(*s)) {
        throw SchemaError("unknown value '" + *s + "' for attribute '" + attr.name + "'");
      }
    }
  }
}

Label label_from_int(int v) {
  if (v == 0) return Label::reject;
  if (v == 1) return Label::accept;
  throw ValidationError("label must be 0 or 1, got " + std::to_string(v));
}

GroundTruthEntry GroundTruthEntry::from_magnitude(std::uint64_t id, Label desired,
                                                  double magnitude) {
  GroundTruthEntry e;
  e.instance_id = id;
  e.desired = desired;
  const double m = std::abs(magnitude);
  e.loss_reject = desired == Label::accept ? m : -m;
  e.loss_accept = -e.loss_reject;
  return e;
}

void validate_entry(const GroundTruthEntry& e) {
  auto in_range = [](double x) { return std::isfinite(x) && x >= -1.0 && x <= 1.0; };
  if (!in_range(e.loss_reject) || !in_range(e.loss_accept)) {
    throw ValidationError("losses of entry " + std::to_string(e.instance_id) +
                          " must lie in [-1, 1]");
  }
  const double right = loss(e, e.desired);
  const double wrong = loss(e, flip(e.desired));
  if (right > kLossTolerance || wrong < -kLossTolerance) {
    throw ValidationError("entry " + std::to_string(e.instance_id) +
                          " violates the loss sign convention");
  }
}

double loss(const GroundTruthEntry& entry, Label out) {
  return out == Label::reject ? entry.loss_reject : entry.loss_accept;
}

const GroundTruthEntry* Dataset::truth_for(std::uint64_t id) const {
  auto it = truths.find(id);
  return it == truths.end() ? nullptr : &it->second;
}

void Dataset::validate() const {
  if (!schema) throw ValidationError("dataset has no schema");
  std::set<std::uint64_t> ids;
  for (const auto& inst : instances) {
    if (!ids.insert(inst.id).second) {
      throw ValidationError("duplicate instance id " + std::to_string(inst.id));
    }
    validate_instance(*schema, inst);
  }
  for (const auto& [id, entry] : truths) {
    if (id != entry.instance_id) throw ValidationError("truth keyed under the wrong id");
    if (!ids.contains(id)) {
      throw ValidationError("truth for unknown instance id " + std::to_string(id));
    }
    validate_entry(entry);
  }
}

bool Dataset::fully_labeled() const {
  return std::all_of(instances.begin(), instances.end(),
                     [&](const Instance& i) { return truths.contains(i.id); });
}

}  // namespace hedgefair

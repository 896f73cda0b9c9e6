#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hedgefair/error.hpp"

namespace hedgefair {

enum class AttributeKind { numeric, categorical };

enum class Sensitivity { non_sensitive, explicit_sensitive, implicit_sensitive };

const char* to_string(AttributeKind kind);
const char* to_string(Sensitivity s);
Sensitivity sensitivity_from_string(const std::string& s);

inline bool is_sensitive(Sensitivity s) { return s != Sensitivity::non_sensitive; }

/// Coarsening of a high-cardinality categorical attribute into groups.
/// Audits, flip tests and feature encoding see the group, never the raw value.
struct ValueGrouping {
  std::map<std::string, std::string> group_of;  // raw value -> group label

  std::vector<std::string> groups() const;
  /// Smallest raw value belonging to the group.
  const std::string& representative(const std::string& group) const;
};

struct AttributeDescriptor {
  std::string name;
  AttributeKind kind = AttributeKind::numeric;
  std::vector<std::string> values;  // categorical only
  Sensitivity sensitivity = Sensitivity::non_sensitive;
  std::optional<ValueGrouping> grouping;

  bool has_value(const std::string& v) const;
  /// Level seen by audits and encodings: the group if grouped, else the value.
  const std::string& level_of(const std::string& value) const;
  /// All levels in canonical (sorted for groups, declared for values) order.
  std::vector<std::string> levels() const;
  /// Raw value standing in for a level.
  const std::string& value_for_level(const std::string& level) const;
};

class AttributeSchema {
 public:
  explicit AttributeSchema(std::vector<AttributeDescriptor> attributes);

  std::size_t size() const { return attributes_.size(); }
  const AttributeDescriptor& at(std::size_t i) const { return attributes_.at(i); }
  const std::vector<AttributeDescriptor>& attributes() const { return attributes_; }

  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // throws SchemaError

  /// Names of categorical sensitive attributes in schema order.
  std::vector<std::string> sensitive_categorical() const;

 private:
  std::vector<AttributeDescriptor> attributes_;
};

using SchemaPtr = std::shared_ptr<const AttributeSchema>;

using AttributeValue = std::variant<double, std::string>;

struct Instance {
  std::uint64_t id = 0;
  std::vector<AttributeValue> values;

  double numeric(std::size_t attr) const { return std::get<double>(values.at(attr)); }
  const std::string& categorical(std::size_t attr) const {
    return std::get<std::string>(values.at(attr));
  }

  bool operator==(const Instance&) const = default;
};

/// Throws SchemaError if the instance does not conform to the schema.
void validate_instance(const AttributeSchema& schema, const Instance& instance);

enum class Label : int { reject = 0, accept = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }
Label label_from_int(int v);
inline Label flip(Label l) { return l == Label::accept ? Label::reject : Label::accept; }

/// Losses are compared with this absolute tolerance.
inline constexpr double kLossTolerance = 1e-9;

struct GroundTruthEntry {
  std::uint64_t instance_id = 0;
  Label desired = Label::reject;
  double loss_reject = 0.0;
  double loss_accept = 0.0;

  /// Builds an entry whose losses are +/- magnitude with the sign convention
  /// (desired label non-positive, opposite label non-negative).
  static GroundTruthEntry from_magnitude(std::uint64_t id, Label desired, double magnitude);

  bool operator==(const GroundTruthEntry&) const = default;
};

void validate_entry(const GroundTruthEntry& entry);

/// l_i(out).
double loss(const GroundTruthEntry& entry, Label out);

struct Dataset {
  SchemaPtr schema;
  std::vector<Instance> instances;
  std::map<std::uint64_t, GroundTruthEntry> truths;  // may be partial

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
  const GroundTruthEntry* truth_for(std::uint64_t id) const;

  /// Checks id uniqueness, truth/instance consistency and every instance.
  void validate() const;

  /// True iff every instance has a truth entry.
  bool fully_labeled() const;
};

}  // namespace hedgefair

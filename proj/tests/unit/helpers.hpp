#pragma once

#include <string>
#include <vector>

#include "hedgefair/core.hpp"
#include "hedgefair/hiring_scenario.hpp"
#include "hedgefair/rng.hpp"

namespace testutil {

using namespace hedgefair;

/// gender (explicit), school (numeric), city, zip grouped by leading digit.
inline SchemaPtr small_schema() {
  return hiring::make_schema(hiring::default_cities(),
                             hiring::leading_digit_groups({"10118", "10001", "02110", "60603"}));
}

/// Random instances over a hiring-style schema, ids 1..n.
inline std::vector<Instance> random_instances(const SchemaPtr& schema, std::size_t n,
                                              RngStream& rng) {
  const auto& cities = schema->at(hiring::kCity).values;
  const auto& zips = schema->at(hiring::kZip).values;
  std::vector<Instance> out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back({k + 1,
                   {std::string(rng.bernoulli(0.5) ? "F" : "M"),
                    static_cast<double>(6 + rng.uniform_index(17)),
                    cities[rng.uniform_index(cities.size())], zips[rng.uniform_index(zips.size())]}});
  }
  return out;
}

/// Dataset whose truths come from a labeling callback, with unit loss magnitude.
template <class Fn>
Dataset labeled(const SchemaPtr& schema, std::vector<Instance> instances, Fn label) {
  Dataset d;
  d.schema = schema;
  d.instances = std::move(instances);
  for (const auto& inst : d.instances) {
    d.truths[inst.id] = GroundTruthEntry::from_magnitude(inst.id, label(inst), 1.0);
  }
  return d;
}

}  // namespace testutil

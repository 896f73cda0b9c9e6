#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hedgefair/core.hpp"

namespace hedgefair {

/// One encoded coordinate: a standardized numeric attribute (empty level) or
/// the one-hot indicator of a categorical level.
struct EncodedCoordinate {
  std::size_t attr = 0;
  std::string level;
};

/// Maps schema instances to real feature vectors for linear classifiers.
/// Numeric attributes are standardized with statistics fitted once; categorical
/// attributes are one-hot over their levels (groups, for grouped attributes).
class FeatureEncoding {
 public:
  static FeatureEncoding fit(SchemaPtr schema, const std::vector<Instance>& instances);

  std::size_t dimension() const { return coords_.size(); }
  const std::vector<EncodedCoordinate>& coordinates() const { return coords_; }
  const SchemaPtr& schema() const { return schema_; }

  Eigen::VectorXd encode(const Instance& inst) const;
  /// Row i is encode(instances[i]).
  Eigen::MatrixXd encode_all(const std::vector<Instance>& instances) const;

  /// Inverse of encode. Categorical attributes decode to the arg-max level
  /// (its representative value for grouped attributes).
  Instance decode(const Eigen::VectorXd& x, std::uint64_t id = 0) const;

  std::vector<std::size_t> coordinates_of(std::size_t attr) const;

  double mean(std::size_t attr) const { return stats_.at(attr).mean; }
  double stddev(std::size_t attr) const { return stats_.at(attr).sd; }

 private:
  struct NumericStats {
    double mean = 0.0;
    double sd = 1.0;
  };

  SchemaPtr schema_;
  std::vector<EncodedCoordinate> coords_;
  std::vector<std::size_t> first_coord_;  // per attribute
  std::vector<NumericStats> stats_;        // per attribute; unused for categorical
};

}  // namespace hedgefair

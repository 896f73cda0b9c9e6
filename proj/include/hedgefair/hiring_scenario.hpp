#pragma once

#include <map>
#include <string>
#include <vector>

#include "hedgefair/core.hpp"
#include "hedgefair/decision_function.hpp"

namespace hedgefair::hiring {

// Attribute positions in the hiring schema.
inline constexpr std::size_t kGender = 0;
inline constexpr std::size_t kSchool = 1;
inline constexpr std::size_t kCity = 2;
inline constexpr std::size_t kZip = 3;

std::vector<std::string> default_cities();

/// gender (explicit sensitive), school (numeric), city, zip (implicit
/// sensitive, grouped by zip_to_group).
SchemaPtr make_schema(const std::vector<std::string>& cities,
                      const std::map<std::string, std::string>& zip_to_group);

/// Zip grouping used when no sidecar is available: the leading digit.
std::map<std::string, std::string> leading_digit_groups(const std::vector<std::string>& zips);

/// Four reference applicants with their ground truth.
Dataset example_fixture();

struct MeritModel {
  double school_mean = 14.0;
  double school_sd = 3.0;
  double school_min = 6.0;
  double school_max = 22.0;
  double threshold_school = 13.5;  // merit crosses 1/2 here, between two school levels
  double slope = 1.0;              // log-odds of merit per school year
  double noise_sd = 0.5;
};

struct ScenarioConfig {
  std::size_t population = 1000;
  std::uint64_t seed = 1;
  double female_share = 0.5;
  std::vector<std::string> cities = default_cities();
  /// zip prefix -> latent group; each prefix expands to zips_per_prefix codes.
  std::map<std::string, std::string> zip_groups = {
      {"100", "G1"}, {"101", "G1"}, {"021", "G2"}, {"022", "G2"}, {"606", "G3"}, {"303", "G3"}};
  std::size_t zips_per_prefix = 5;
  std::string disadvantaged_group = "G3";
  double rho = 0.9;           // P(zip drawn from the applicant's own latent group)
  double beta_gender = 0.0;   // log-odds penalty on women in historical labels
  double beta_latent = 0.0;   // log-odds penalty on the disadvantaged latent group
  double label_noise = 0.25;  // logistic noise scale on historical log-odds
  MeritModel merit;

  void validate() const;
  std::vector<std::string> latent_groups() const;
  /// Every zip the generator can emit, mapped to its prefix's group.
  std::map<std::string, std::string> zip_to_group() const;
};

struct Population {
  Dataset truth;       // desired labels = merit threshold
  Dataset historical;  // same instances, labels from the biased historical process
  std::vector<std::string> latent_group;  // per instance; never given to functions
  std::vector<double> merit;              // per instance
};

/// Seeded synthetic population; identical config gives identical output.
Population generate_population(const ScenarioConfig& cfg);

/// |l| = clamp(2 |merit - 1/2|, 0.1, 1).
double loss_magnitude(double merit);

/// Fixed school rule, discriminatory gender rule, black box and unconstrained
/// margin classifier, the learned ones trained on `history`.
std::vector<DecisionFunction> default_portfolio(const Dataset& history, double reg = 1e-3);

}  // namespace hedgefair::hiring

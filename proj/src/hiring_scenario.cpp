#include "hedgefair/hiring_scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "hedgefair/enhancer.hpp"
#include "hedgefair/rng.hpp"

namespace hedgefair::hiring {

std::vector<std::string> default_cities() { return {"NYC", "Boston", "Chicago", "Atlanta"}; }

SchemaPtr make_schema(const std::vector<std::string>& cities,
                      const std::map<std::string, std::string>& zip_to_group) {
  AttributeDescriptor gender{"gender", AttributeKind::categorical, {"M", "F"},
                             Sensitivity::explicit_sensitive, std::nullopt};
  AttributeDescriptor school{"school", AttributeKind::numeric, {}, Sensitivity::non_sensitive,
                             std::nullopt};
  AttributeDescriptor city{"city", AttributeKind::categorical, cities, Sensitivity::non_sensitive,
                           std::nullopt};
  AttributeDescriptor zip{"zip", AttributeKind::categorical, {}, Sensitivity::implicit_sensitive,
                          ValueGrouping{zip_to_group}};
  for (const auto& [z, g] : zip_to_group) zip.values.push_back(z);
  return std::make_shared<const AttributeSchema>(
      std::vector<AttributeDescriptor>{gender, school, city, zip});
}

std::map<std::string, std::string> leading_digit_groups(const std::vector<std::string>& zips) {
  std::map<std::string, std::string> out;
  for (const auto& z : zips) {
    if (z.empty()) throw ValidationError("empty zip code");
    out[z] = std::string("Z") + z[0];
  }
  return out;
}

Dataset example_fixture() {
  Dataset d;
  d.schema = make_schema(default_cities(),
                         leading_digit_groups({"10118", "02110", "60603", "30302"}));
  auto add = [&](std::uint64_t id, const char* g, double s, const char* c, const char* z,
                 Label truth, double l0, double l1) {
    d.instances.push_back({id, {std::string(g), s, std::string(c), std::string(z)}});
    d.truths[id] = GroundTruthEntry{id, truth, l0, l1};
  };
  add(1, "M", 15, "NYC", "10118", Label::reject, -1.00, 1.00);
  add(2, "F", 15, "Boston", "02110", Label::accept, 0.25, -0.25);
  add(3, "F", 19, "Chicago", "60603", Label::accept, 0.50, -0.50);
  add(4, "M", 10, "Atlanta", "30302", Label::reject, -1.00, 1.00);
  d.validate();
  return d;
}

void ScenarioConfig::validate() const {
  if (population < 1) throw ValidationError("population must be at least 1");
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(what) + " must lie in [0, 1]");
  };
  prob(female_share, "female_share");
  prob(rho, "rho");
  if (cities.empty()) throw ValidationError("at least one city is required");
  if (std::set<std::string>(cities.begin(), cities.end()).size() != cities.size()) {
    throw ValidationError("duplicate city");
  }
  if (zip_groups.empty()) throw ValidationError("at least one zip group is required");
  if (zips_per_prefix < 1 || zips_per_prefix > 99) {
    throw ValidationError("zips_per_prefix must lie in [1, 99]");
  }
  const auto groups = latent_groups();
  if (!disadvantaged_group.empty() &&
      std::find(groups.begin(), groups.end(), disadvantaged_group) == groups.end()) {
    throw ValidationError("disadvantaged group '" + disadvantaged_group + "' has no zip prefix");
  }
  if (!(label_noise >= 0.0)) throw ValidationError("label_noise must be non-negative");
  if (!(merit.school_sd >= 0.0) || !(merit.noise_sd >= 0.0)) {
    throw ValidationError("merit spreads must be non-negative");
  }
  if (!(merit.school_min <= merit.school_max) || merit.school_min < 0.0) {
    throw ValidationError("school range is invalid");
  }
  if (!std::isfinite(beta_gender) || !std::isfinite(beta_latent)) {
    throw ValidationError("bias knobs must be finite");
  }
}

std::vector<std::string> ScenarioConfig::latent_groups() const {
  std::set<std::string> g;
  for (const auto& [prefix, group] : zip_groups) g.insert(group);
  return {g.begin(), g.end()};
}

std::map<std::string, std::string> ScenarioConfig::zip_to_group() const {
  std::map<std::string, std::string> out;
  for (const auto& [prefix, group] : zip_groups) {
    for (std::size_t k = 1; k <= zips_per_prefix; ++k) {
      char suffix[4];
      std::snprintf(suffix, sizeof suffix, "%02zu", k);
      out[prefix + suffix] = group;
    }
  }
  return out;
}

double loss_magnitude(double merit) { return std::clamp(2.0 * std::abs(merit - 0.5), 0.1, 1.0); }

Population generate_population(const ScenarioConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed);
  const auto groups = cfg.latent_groups();
  const auto zip_map = cfg.zip_to_group();
  std::map<std::string, std::vector<std::string>> zips_of;
  for (const auto& [z, g] : zip_map) zips_of[g].push_back(z);
  auto schema = make_schema(cfg.cities, zip_map);

  // Shuffled ids so that arrival order and id carry no signal.
  std::vector<std::uint64_t> ids(cfg.population);
  std::iota(ids.begin(), ids.end(), 1);
  for (std::size_t k = ids.size(); k > 1; --k) {
    std::swap(ids[k - 1], ids[rng.uniform_index(k)]);
  }

  Population pop;
  pop.truth.schema = schema;
  pop.historical.schema = schema;
  const auto& m = cfg.merit;
  for (std::size_t n = 0; n < cfg.population; ++n) {
    const bool female = rng.bernoulli(cfg.female_share);
    const double school =
        std::clamp(std::round(rng.normal(m.school_mean, m.school_sd)), m.school_min, m.school_max);
    const std::string& city = cfg.cities[rng.uniform_index(cfg.cities.size())];
    const std::string& latent = groups[rng.uniform_index(groups.size())];
    const std::string& zip_group =
        rng.bernoulli(cfg.rho) ? latent : groups[rng.uniform_index(groups.size())];
    const auto& pool = zips_of.at(zip_group);
    const std::string& zip = pool[rng.uniform_index(pool.size())];
    const double logit = m.slope * (school - m.threshold_school) + rng.normal(0.0, m.noise_sd);
    const double merit = 1.0 / (1.0 + std::exp(-logit));

    const double noise = cfg.label_noise > 0.0 ? rng.logistic(cfg.label_noise) : 0.0;
    const double hist_logit = logit - (female ? cfg.beta_gender : 0.0) -
                              (latent == cfg.disadvantaged_group ? cfg.beta_latent : 0.0) + noise;

    const std::uint64_t id = ids[n];
    Instance inst{id, {std::string(female ? "F" : "M"), school, city, zip}};
    const double mag = loss_magnitude(merit);
    const Label truth = merit >= 0.5 ? Label::accept : Label::reject;
    const Label hist = hist_logit >= 0.0 ? Label::accept : Label::reject;
    pop.truth.instances.push_back(inst);
    pop.truth.truths[id] = GroundTruthEntry::from_magnitude(id, truth, mag);
    pop.historical.instances.push_back(std::move(inst));
    pop.historical.truths[id] = GroundTruthEntry::from_magnitude(id, hist, mag);
    pop.latent_group.push_back(latent);
    pop.merit.push_back(merit);
  }
  return pop;
}

std::vector<DecisionFunction> default_portfolio(const Dataset& history, double reg) {
  if (history.empty()) throw ValidationError("default portfolio needs a training history");
  std::vector<DecisionFunction> out;
  out.push_back(DecisionFunction::make_rule("school_rule", history.schema, "school >= 12"));
  out.push_back(DecisionFunction::make_rule("gender_rule", history.schema, "gender == M"));
  auto shared = std::make_shared<const Dataset>(history);
  out.push_back(DecisionFunction::make_blackbox("blackbox", RetrainableBlackBox::fit(shared, reg)));
  auto encoding = std::make_shared<const FeatureEncoding>(
      FeatureEncoding::fit(history.schema, history.instances));
  out.push_back(train_constrained("margin", history, encoding, {}, reg));
  return out;
}

}  // namespace hedgefair::hiring

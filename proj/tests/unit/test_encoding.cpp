#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "hedgefair/encoding.hpp"

using namespace hedgefair;

TEST_SUITE("enhancer") {

TEST_CASE("encoding layout and standardization") {
  auto schema = testutil::small_schema();
  RngStream rng(3);
  auto inst = testutil::random_instances(schema, 300, rng);
  auto enc = FeatureEncoding::fit(schema, inst);
  // gender 2 + school 1 + city 4 + zip groups 3
  CHECK(enc.dimension() == 10);
  CHECK(enc.coordinates_of(hiring::kZip).size() == 3);

  const Eigen::MatrixXd X = enc.encode_all(inst);
  const auto school = enc.coordinates_of(hiring::kSchool).front();
  const double mean = X.col(static_cast<Eigen::Index>(school)).mean();
  const double var =
      (X.col(static_cast<Eigen::Index>(school)).array() - mean).square().mean();
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));

  // Refit on the same data reproduces the statistics.
  auto again = FeatureEncoding::fit(schema, inst);
  CHECK(again.mean(hiring::kSchool) == enc.mean(hiring::kSchool));
  CHECK(again.stddev(hiring::kSchool) == enc.stddev(hiring::kSchool));

  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    double onehot = 0.0;
    for (auto c : enc.coordinates_of(hiring::kZip)) onehot += X(r, static_cast<Eigen::Index>(c));
    CHECK(onehot == 1.0);
  }
}

TEST_CASE("encoding round trip preserves memberships") {
  auto schema = testutil::small_schema();
  RngStream rng(4);
  auto inst = testutil::random_instances(schema, 200, rng);
  auto enc = FeatureEncoding::fit(schema, inst);
  for (const auto& i : inst) {
    const auto back = enc.decode(enc.encode(i), i.id);
    CHECK(std::abs(back.numeric(hiring::kSchool) - i.numeric(hiring::kSchool)) < 1e-9);
    CHECK(back.categorical(hiring::kGender) == i.categorical(hiring::kGender));
    CHECK(back.categorical(hiring::kCity) == i.categorical(hiring::kCity));
    const auto& zip = schema->at(hiring::kZip);
    CHECK(zip.level_of(back.categorical(hiring::kZip)) ==
          zip.level_of(i.categorical(hiring::kZip)));
  }
  CHECK_THROWS_AS(enc.decode(Eigen::VectorXd::Zero(3)), SchemaError);
}

TEST_CASE("constant numeric column does not divide by zero") {
  auto schema = testutil::small_schema();
  std::vector<Instance> inst;
  for (std::uint64_t k = 1; k <= 5; ++k) {
    inst.push_back({k, {std::string("M"), 12.0, std::string("NYC"), std::string("10118")}});
  }
  auto enc = FeatureEncoding::fit(schema, inst);
  CHECK(enc.stddev(hiring::kSchool) == 1.0);
  CHECK(enc.encode(inst[0]).allFinite());
}

}  // TEST_SUITE

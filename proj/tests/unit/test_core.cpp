#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "hedgefair/dataset_io.hpp"
#include "hedgefair/decision_function.hpp"

using namespace hedgefair;

TEST_SUITE("core") {

TEST_CASE("schema invariants") {
  AttributeDescriptor num{"school", AttributeKind::numeric, {}, Sensitivity::non_sensitive, {}};
  AttributeDescriptor g{"gender", AttributeKind::categorical, {"M", "F"},
                        Sensitivity::explicit_sensitive, {}};
  CHECK_NOTHROW(AttributeSchema({g, num}));
  CHECK_THROWS_AS(AttributeSchema({g, g, num}), ValidationError);
  CHECK_THROWS_AS(AttributeSchema({g}), ValidationError);  // nothing non-sensitive

  auto empty = g;
  empty.values.clear();
  CHECK_THROWS_AS(AttributeSchema({empty, num}), ValidationError);
  auto dup = g;
  dup.values = {"M", "M"};
  CHECK_THROWS_AS(AttributeSchema({dup, num}), ValidationError);
}

TEST_CASE("instance validation") {
  auto schema = testutil::small_schema();
  Instance ok{1, {std::string("M"), 12.0, std::string("NYC"), std::string("10118")}};
  CHECK_NOTHROW(validate_instance(*schema, ok));

  Instance short_row{2, {std::string("M"), 12.0}};
  CHECK_THROWS_AS(validate_instance(*schema, short_row), SchemaError);
  Instance bad_city{3, {std::string("M"), 12.0, std::string("Paris"), std::string("10118")}};
  CHECK_THROWS_AS(validate_instance(*schema, bad_city), SchemaError);
  Instance nan_school{4, {std::string("M"), std::nan(""), std::string("NYC"), std::string("10118")}};
  CHECK_THROWS_AS(validate_instance(*schema, nan_school), SchemaError);
  Instance swapped{5, {12.0, std::string("M"), std::string("NYC"), std::string("10118")}};
  CHECK_THROWS_AS(validate_instance(*schema, swapped), SchemaError);
}

TEST_CASE("zip grouping levels") {
  auto schema = testutil::small_schema();
  const auto& zip = schema->at(hiring::kZip);
  CHECK(zip.level_of("10118") == "Z1");
  CHECK(zip.level_of("10001") == "Z1");
  CHECK(zip.levels() == std::vector<std::string>{"Z0", "Z1", "Z6"});
  CHECK(zip.value_for_level("Z1") == "10001");  // smallest member
  CHECK_THROWS_AS(zip.level_of("99999"), SchemaError);
}

TEST_CASE("fixture losses") {
  const auto d = hiring::example_fixture();
  REQUIRE(d.size() == 4);
  CHECK(loss(d.truths.at(1), Label::accept) == 1.00);
  CHECK(loss(d.truths.at(2), Label::accept) == -0.25);
  CHECK(loss(d.truths.at(3), Label::reject) == 0.50);
  CHECK(loss(d.truths.at(4), Label::reject) == -1.00);
  const auto& row2 = d.instances[1];
  CHECK(row2.categorical(hiring::kGender) == "F");
  CHECK(row2.numeric(hiring::kSchool) == 15.0);
  CHECK(row2.categorical(hiring::kCity) == "Boston");
  CHECK(row2.categorical(hiring::kZip) == "02110");
  CHECK(d.truths.at(2).desired == Label::accept);
}

TEST_CASE("ground truth sign convention") {
  CHECK_NOTHROW(validate_entry({1, Label::reject, -1.0, 1.0}));
  CHECK_THROWS_AS(validate_entry({1, Label::reject, 0.5, 1.0}), ValidationError);
  CHECK_THROWS_AS(validate_entry({1, Label::accept, -0.5, 0.2}), ValidationError);
  CHECK_THROWS_AS(validate_entry({1, Label::accept, 1.5, -0.2}), ValidationError);
  const auto e = GroundTruthEntry::from_magnitude(7, Label::accept, 0.3);
  CHECK(e.loss_accept == doctest::Approx(-0.3));
  CHECK(e.loss_reject == doctest::Approx(0.3));
  CHECK_THROWS_AS(label_from_int(2), ValidationError);
}

TEST_CASE("evaluate and accuracy errors on the fixture") {
  const auto d = hiring::example_fixture();
  auto school12 = DecisionFunction::make_rule("s12", d.schema, "school >= 12");
  CHECK(school12.evaluate(d.instances[2]) == Label::accept);  // school 19
  CHECK(school12.evaluate(d.instances[3]) == Label::reject);  // school 10
  auto always = DecisionFunction::make_rule("yes", d.schema, "true");
  for (const auto& inst : d.instances) CHECK(always.evaluate(inst) == Label::accept);

  // Reference decisions: accept, accept, reject, accept.
  auto reference = DecisionFunction::make_rule("t1", d.schema, "school <= 15");
  const Label outputs[] = {Label::accept, Label::accept, Label::reject, Label::accept};
  std::vector<std::uint64_t> wrong;
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(reference.evaluate(d.instances[k]) == outputs[k]);
    if (accuracy_error(reference, d.instances[k], d.truths.at(d.instances[k].id))) {
      wrong.push_back(d.instances[k].id);
    }
  }
  CHECK(wrong == std::vector<std::uint64_t>{1, 3, 4});
  CHECK_THROWS_AS(accuracy_error(reference, d.instances[0], d.truths.at(2)), ValidationError);

  Instance alien{9, {std::string("X"), 1.0, std::string("NYC"), std::string("10118")}};
  CHECK_THROWS_AS(reference.evaluate(alien), SchemaError);
}

TEST_CASE("perfect function has no accuracy errors") {
  const auto d = hiring::example_fixture();
  auto oracle = DecisionFunction::make_rule("oracle", d.schema, "school >= 15 AND gender == F");
  for (const auto& inst : d.instances) {
    CHECK_FALSE(accuracy_error(oracle, inst, d.truths.at(inst.id)));
  }
  CHECK(accuracy(oracle, d) == 1.0);
}

TEST_CASE("dataset validation") {
  auto d = hiring::example_fixture();
  CHECK_NOTHROW(d.validate());
  auto dup = d;
  dup.instances.push_back(dup.instances.front());
  CHECK_THROWS_AS(dup.validate(), ValidationError);
  auto orphan = d;
  orphan.truths[99] = GroundTruthEntry{99, Label::reject, -1, 1};
  CHECK_THROWS_AS(orphan.validate(), ValidationError);
}

TEST_CASE("dataset csv round trip") {
  const auto d = hiring::example_fixture();
  const std::string text = format_dataset_csv(d);
  CHECK(text.rfind(std::string(kDatasetHeader) + "\n", 0) == 0);
  const auto back = parse_dataset_csv(text, sidecar_from_schema(*d.schema));
  REQUIRE(back.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(back.instances[k] == d.instances[k]);
  CHECK(back.truths == d.truths);
  CHECK(format_dataset_csv(back) == text);
}

TEST_CASE("dataset csv rejects malformed rows") {
  const std::string header = std::string(kDatasetHeader) + "\n";
  CHECK_THROWS_AS(parse_dataset_csv("id,gender\n1,M\n"), ValidationError);
  CHECK_THROWS_AS(parse_dataset_csv(header + "1,X,12,NYC,10118,,,\n"), ValidationError);
  CHECK_THROWS_AS(parse_dataset_csv(header + "1,M,12,NYC,10118,1,,\n"), ValidationError);
  CHECK_THROWS_AS(parse_dataset_csv(header + "1,M,12,NYC,10118,1,0.5,0.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_dataset_csv(header + "1,M,12,NYC\n"), ValidationError);
  const auto partial = parse_dataset_csv(header + "1,M,12,NYC,10118,,,\n2,F,9,Boston,02110,0,-1,1\n");
  CHECK(partial.size() == 2);
  CHECK(partial.truths.size() == 1);
}

TEST_CASE("shipped fixture file matches the built-in fixture") {
  const auto file = read_dataset_csv(std::string(HEDGEFAIR_SOURCE_DIR) + "/data/fixture.csv");
  const auto d = hiring::example_fixture();
  REQUIRE(file.size() == d.size());
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(file.instances[k] == d.instances[k]);
  CHECK(file.truths == d.truths);
}

}  // TEST_SUITE

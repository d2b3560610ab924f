#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "mgrestore/builtin_feeders.hpp"
#include "mgrestore/feeder_io.hpp"
#include "support/random_feeder.hpp"
#include "support/small_feeders.hpp"

using namespace mgrestore;

namespace {

bool has_violation(const ValidationReport& r, const std::string& text) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

std::vector<double> load_kw(const Feeder& f, std::size_t agent) {
  std::vector<double> kw;
  for (auto b : f.agent_breakers(agent))
    for (const auto& l : f.loads())
      if (l.breaker_id == f.breakers()[b].id) kw.push_back(l.p_rated_kw);
  return kw;
}

}  // namespace

TEST(BuiltinFeeders, Ieee13MatchesCaseStudyAggregates) {
  const auto f = builtin_feeder("ieee13");
  EXPECT_TRUE(validate_feeder(f).ok());
  EXPECT_EQ(f.agent_count(), 2u);
  EXPECT_EQ(f.breaker_count(), 9u);
  EXPECT_EQ(f.loads().size(), 9u);
  EXPECT_DOUBLE_EQ(f.total_load_kw(), 3461.0);
  EXPECT_DOUBLE_EQ(f.generation_capacity_kw(), 2600.0);
  EXPECT_EQ(load_kw(f, 0), (std::vector<double>{230, 170, 400, 200}));
  EXPECT_EQ(load_kw(f, 1), (std::vector<double>{170, 128, 1150, 170, 843}));
  for (const auto& l : f.loads()) EXPECT_EQ(l.weight, 1.0);
}

TEST(BuiltinFeeders, Ieee123MatchesCaseStudyAggregates) {
  const auto f = builtin_feeder("ieee123");
  EXPECT_TRUE(validate_feeder(f).ok());
  EXPECT_EQ(f.breaker_count(), 26u);
  std::vector<std::size_t> sizes;
  for (std::size_t a = 0; a < f.agent_count(); ++a) sizes.push_back(f.agent_breakers(a).size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 5, 3, 3, 5}));
  EXPECT_DOUBLE_EQ(f.total_load_kw(), 3025.0);
  EXPECT_DOUBLE_EQ(f.generation_capacity_kw(), 2400.0);
}

TEST(BuiltinFeeders, EveryBreakerInExactlyOnePartitionList) {
  for (const auto& name : builtin_feeder_names()) {
    const auto f = builtin_feeder(name);
    std::map<std::string, int> count;
    for (const auto& list : f.partition().agents)
      for (const auto& id : list) ++count[id];
    for (const auto& b : f.breakers()) EXPECT_EQ(count[b.id], 1) << name << " " << b.id;
  }
}

TEST(BuiltinFeeders, UnknownNameIsRejected) {
  EXPECT_THROW(builtin_feeder("ieee8500"), UnknownFeederError);
  try {
    builtin_feeder("ieee8500");
  } catch (const UnknownFeederError& e) {
    EXPECT_NE(std::string(e.what()).find("ieee8500"), std::string::npos);
  }
}

TEST(FeederDocument, RoundTripIsFieldForField) {
  for (const auto& name : builtin_feeder_names()) {
    const auto f = builtin_feeder(name);
    const auto text = serialize_feeder(f);
    const auto g = load_feeder(text);
    EXPECT_EQ(f.data(), g.data()) << name;
    EXPECT_EQ(serialize_feeder(g), text);
    EXPECT_EQ(feeder_hash(f), feeder_hash(g));
  }
}

TEST(FeederDocument, RoundTripOnRandomFeeders) {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto d = testsupport::random_feeder(rng);
    const Feeder f(d);
    ASSERT_TRUE(validate_feeder(f).ok());
    EXPECT_EQ(load_feeder(serialize_feeder(d)).data(), d);
  }
}

TEST(FeederDocument, CarriesFormatVersion) {
  const auto doc = feeder_to_json(builtin_feeder("ieee13").data());
  EXPECT_EQ(doc.at("format_version"), 1);
  for (const char* key : {"buses", "lines", "breakers", "loads", "generators"}) EXPECT_TRUE(doc.at(key).is_array());
  EXPECT_TRUE(doc.at("partition").is_object());
}

TEST(FeederDocument, ThirteenNodeDocumentLoadsWithNineLoads) {
  std::istringstream in(serialize_feeder(builtin_feeder("ieee13")));
  const auto f = load_feeder(in);
  EXPECT_EQ(f.loads().size(), 9u);
  EXPECT_DOUBLE_EQ(f.total_load_kw(), 3461.0);
}

TEST(FeederDocument, DanglingBusReferenceIsAReferenceError) {
  auto doc = feeder_to_json(testsupport::two_bus(0.01, 0.0, 100.0));
  doc["loads"][0]["bus_id"] = "b99";
  EXPECT_THROW(load_feeder(doc.dump()), ReferenceError);
}

TEST(FeederDocument, MalformedDocumentsAreParseErrors) {
  EXPECT_THROW(load_feeder("{not json"), ParseError);
  auto doc = feeder_to_json(testsupport::two_bus(0.01, 0.0, 100.0));
  doc.erase("lines");
  EXPECT_THROW(load_feeder(doc.dump()), ParseError);
  doc = feeder_to_json(testsupport::two_bus(0.01, 0.0, 100.0));
  doc["format_version"] = 2;
  EXPECT_THROW(load_feeder(doc.dump()), ParseError);
  doc = feeder_to_json(testsupport::two_bus(0.01, 0.0, 100.0));
  doc["lines"][0]["resistance"] = "small";
  EXPECT_THROW(load_feeder(doc.dump()), ParseError);
}

TEST(FeederDocument, ZeroLoadsAndOneGeneratorIsValid) {
  FeederData d;
  d.name = "idle";
  d.buses = {{"b1"}};
  d.generators = {{"G1", "b1", 0.0, 100.0, -10.0, 10.0}};
  const auto f = load_feeder(serialize_feeder(d));
  EXPECT_EQ(f.total_load_kw(), 0.0);
}

TEST(FeederDocument, InvalidFeederIsAValidationError) {
  auto d = testsupport::two_bus(0.01, 0.0, 100.0);
  d.partition.agents = {{}};
  try {
    load_feeder(serialize_feeder(d));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_FALSE(e.violations().empty());
  }
}

TEST(Validation, UncoveredBreakerIsNamed) {
  auto d = builtin_feeder("ieee13").data();
  auto& mg2 = d.partition.agents[1];
  mg2.erase(std::find(mg2.begin(), mg2.end(), "cb5"));
  const auto r = validate_feeder(Feeder(d));
  EXPECT_TRUE(has_violation(r, "uncovered breaker cb5"));
}

TEST(Validation, CycleIsNonRadial) {
  auto d = testsupport::chain(3, 0.01, 0.01, 10.0);
  d.lines.push_back({"loop", "b3", "b1", 0.01, 0.01, 1000.0});
  EXPECT_TRUE(has_violation(validate_feeder(Feeder(d)), "non-radial topology"));
}

TEST(Validation, BreakerInTwoAgents) {
  auto d = testsupport::chain(2, 0.01, 0.01, 10.0);
  d.partition.agents = {{"cb1", "cb2"}, {"cb2"}};
  EXPECT_TRUE(has_violation(validate_feeder(Feeder(d)), "breaker cb2 assigned to several agents"));
}

TEST(Validation, EmptyAgentList) {
  auto d = testsupport::chain(2, 0.01, 0.01, 10.0);
  d.partition.agents = {{"cb1", "cb2"}, {}};
  EXPECT_TRUE(has_violation(validate_feeder(Feeder(d)), "partition agent 1 has no breakers"));
}

TEST(Validation, ElementLevelChecks) {
  auto d = testsupport::two_bus(0.01, 0.0, 100.0);
  d.buses[1].v_min = 1.1;
  d.lines[0].resistance = -1.0;
  d.lines[0].s_rating_kva = 0.0;
  d.loads[0].weight = 1.5;
  d.generators[0].p_min_kw = 2000.0;
  const auto r = validate_feeder(Feeder(d));
  EXPECT_TRUE(has_violation(r, "bus b2 has invalid voltage limits"));
  EXPECT_TRUE(has_violation(r, "line l1 has negative resistance"));
  EXPECT_TRUE(has_violation(r, "line l1 has non-positive s_rating"));
  EXPECT_TRUE(has_violation(r, "load L1 has weight outside (0, 1]"));
  EXPECT_TRUE(has_violation(r, "generator G1 has p_min > p_max"));
}

TEST(Validation, DuplicateIdsAndSelfLoops) {
  auto d = testsupport::chain(2, 0.01, 0.01, 10.0);
  d.buses.push_back({"b1"});
  d.lines.push_back({"self", "b2", "b2", 0.01, 0.01, 100.0});
  const auto r = validate_feeder(Feeder(d));
  EXPECT_TRUE(has_violation(r, "duplicate bus id b1"));
  EXPECT_TRUE(has_violation(r, "line self connects bus b2 to itself"));
}

TEST(Validation, LoadMustBeControlledByItsBreaker) {
  auto d = testsupport::chain(2, 0.01, 0.01, 10.0);
  d.loads[0].breaker_id = "cb2";  // L1 sits upstream of cb2
  EXPECT_TRUE(has_violation(validate_feeder(Feeder(d)), "load L1 is not controlled by breaker cb2"));
}

TEST(Validation, IsolatedBusHasNoSupply) {
  auto d = testsupport::chain(1, 0.01, 0.01, 10.0);
  d.buses.push_back({"lonely"});
  EXPECT_TRUE(has_violation(validate_feeder(Feeder(d)), "bus lonely has no path to a generator"));
}

TEST(Feeder, SingleAgentCollapsesPartition) {
  const auto f = builtin_feeder("ieee123").with_single_agent();
  EXPECT_EQ(f.agent_count(), 1u);
  EXPECT_EQ(f.agent_breakers(0).size(), 26u);
  EXPECT_TRUE(validate_feeder(f).ok());
}

TEST(BreakerStates, ParseAndFormat) {
  const auto f = builtin_feeder("ieee13");
  const auto s = parse_states(f, "011000101");
  EXPECT_EQ(format_states(s), "011000101");
  EXPECT_THROW(parse_states(f, "0110"), ParseError);
  EXPECT_THROW(parse_states(f, "01100010x"), ParseError);
}

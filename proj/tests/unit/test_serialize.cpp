#include <doctest.h>

#include <sstream>

#include "bmflc/csv.hpp"
#include "bmflc/serialize.hpp"

using namespace bmflc;

TEST_CASE("motion JSON round-trips bit for bit") {
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    const auto m = sample_motion(MotionRecipe{}, seed);
    const auto back = motion_spec_from_json(Json::parse(to_json(m).dump()));
    CHECK(back == m);
  }
}

TEST_CASE("motion JSON is validated") {
  auto j = to_json(sample_motion(MotionRecipe{}, 1));
  j["vibration"] = Json::array();
  CHECK_THROWS_AS(motion_spec_from_json(j), ConfigError);
  j = to_json(sample_motion(MotionRecipe{}, 1));
  j["colour"] = 1;
  CHECK_THROWS_AS(motion_spec_from_json(j), ConfigError);
}

TEST_CASE("apply_json merges only present keys") {
  StepSizeParams p;
  p.eta = 0.5;
  apply_json(Json{{"k_dmp", 10.0}, {"variant", "rls"}}, p);
  CHECK(p.eta == 0.5);
  CHECK(p.k_dmp == 10.0);
  CHECK(p.variant == Variant::Rls);
  CHECK_THROWS_AS(apply_json(Json{{"gain", 1.0}}, p), ConfigError);
  CHECK_THROWS_AS(apply_json(Json{{"eta", "fast"}}, p), ConfigError);
  CHECK_THROWS_AS(apply_json(Json{{"variant", "nlms"}}, p), ConfigError);

  MotionRecipe r;
  apply_json(Json{{"vibration", {{"b_n", 6}, {"frequency_law", "exponential"}}}, {"s_n", 0.1}}, r);
  CHECK(r.vibration.b_n == 6);
  CHECK(r.vibration.a_n == 1);
  CHECK(r.vibration.frequency_law == FrequencyLaw::Exponential);
  CHECK(r.s_n == 0.1);
  CHECK_THROWS_AS(apply_json(Json{{"vibration", {{"b_n", 2.5}}}}, r), ConfigError);

  ControllerParams c;
  apply_json(Json{{"model_compensation", false}}, c);
  CHECK_FALSE(c.model_compensation);
  PlantParams pl;
  apply_json(Json{{"mass", 2.0}}, pl);
  CHECK(pl.mass == 2.0);
}

TEST_CASE("filter state round-trips") {
  StepSizeParams p;
  p.variant = Variant::Kalman;
  auto s = FilterState::initial(2, p);
  s.w << 1.0, 2.0, 3.0, 4.0;
  s.P(0, 3) = 0.25;
  s.iter = 9;
  s.t = 0.5;
  const auto back = filter_state_from_json(Json::parse(to_json(s).dump()));
  CHECK(back.w == s.w);
  CHECK(back.P == s.P);
  CHECK(back.iter == 9);
  CHECK(back.t == 0.5);
}

TEST_CASE("hash depends on content") {
  CHECK(json_hash(Json{{"a", 1}}) == json_hash(Json{{"a", 1}}));
  CHECK(json_hash(Json{{"a", 1}}) != json_hash(Json{{"a", 2}}));
  CHECK(json_hash(Json{{"a", 1}}).size() == 16);
}

TEST_CASE("CSV reading") {
  std::istringstream in("t, v ,note\n0,1.5,\"a,b\"\n\n0.001,-2e-3,\"say \"\"hi\"\"\"\n");
  const auto t = read_csv(in);
  CHECK(t.header == std::vector<std::string>{"t", "v", "note"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][2] == "a,b");
  CHECK(t.rows[1][2] == "say \"hi\"");
  CHECK(t.numeric("v") == std::vector<double>{1.5, -2e-3});
  CHECK(t.has_column("t"));
  CHECK_FALSE(t.has_column("x"));
  CHECK_THROWS_AS(t.numeric("x"), CsvSchemaError);
  CHECK_THROWS_AS(t.numeric("note"), CsvSchemaError);

  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv(ragged), CsvSchemaError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_csv(empty), CsvSchemaError);
}

TEST_CASE("CSV writing round-trips doubles") {
  std::ostringstream out;
  {
    CsvWriter w(out, {"x", "label"});
    w.row({format_double(0.1 + 0.2), "p,q"});
    w.row({format_cell(std::nullopt), "plain"});
    CHECK_THROWS_AS(w.row({"1"}), std::invalid_argument);
  }
  CHECK(out.str() == "x,label\n0.30000000000000004,\"p,q\"\n,plain\n");
  std::istringstream in(out.str());
  const auto t = read_csv(in);
  CHECK(t.rows[0][1] == "p,q");
  CHECK(std::stod(t.rows[0][0]) == 0.1 + 0.2);
}

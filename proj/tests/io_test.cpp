#include <gtest/gtest.h>

#include <sstream>

#include "stencilwa/io.hpp"

using namespace stencilwa;

namespace {

const char* kSuite = R"({
  "grids": {"g": {"inner_extent": 64, "outer_extent": 32, "halo_lo": [2, 2], "halo_hi": [3, 3]}},
  "arrays": [{"name": "a", "grid": "g"}, {"name": "b", "grid": "g"}],
  "kernels": [
    {"name": "k1", "flops_per_it": 3, "loop_j": [0, 1],
     "accesses": [{"array": "b", "dj": 0, "dk": 1, "mode": "read"},
                  {"array": "a", "mode": "write"}]}
  ],
  "policy_overrides": {"k1": "nt+speci2m:1.1,1.3"}
})";

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Suite, Parses) {
  const auto s = parse_suite(kSuite);
  ASSERT_EQ(s.kernels.size(), 1u);
  const auto& k = s.kernels[0];
  EXPECT_EQ(k.flops_per_it, 3);
  EXPECT_EQ(k.loop_j, (LoopRange{0, 1}));
  // arrays in first-reference order
  ASSERT_EQ(k.arrays.size(), 2u);
  EXPECT_EQ(k.arrays[0].name, "b");
  EXPECT_EQ(k.accesses[1], (Access{"a", 0, 0, AccessMode::write}));
  EXPECT_EQ(s.grids.at("g").row_stride(), 69);
  const auto& o = std::get<NtPlusSpecI2M>(s.policy_overrides.at("k1"));
  EXPECT_DOUBLE_EQ(o.nt, 1.1);
  EXPECT_DOUBLE_EQ(o.speci2m, 1.3);
}

TEST(Suite, EmptyIsValid) {
  EXPECT_TRUE(parse_suite("{}").kernels.empty());
  EXPECT_TRUE(parse_suite(R"({"kernels": []})").kernels.empty());
}

TEST(Suite, ParseErrorsCarryLineAndColumn) {
  const auto msg = error_of([] { parse_suite("{\n  \"kernels\": [,]\n}", "x.json"); });
  EXPECT_NE(msg.find("x.json:2:"), std::string::npos) << msg;
}

TEST(Suite, SchemaErrors) {
  EXPECT_NE(error_of([] { parse_suite(R"({"kernels": [{"name": "k"}]})"); }).find("schema"), std::string::npos);
  EXPECT_NE(error_of([] {
              parse_suite(R"({"arrays": [{"name": "a"}],
                "kernels": [{"name": "k", "accesses": [{"array": "a", "mode": "modify"}]}]})");
            }).find("access mode"),
            std::string::npos);
  EXPECT_NE(error_of([] {
              parse_suite(R"({"kernels": [{"name": "k", "accesses": [{"array": "zz", "mode": "read"}]}]})");
            }).find("undeclared"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_suite(R"({"arrays": [{"name": "a"}, {"name": "a"}]})"); }).find("twice"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_suite(R"({"arrays": [{"name": "a", "grid": "nope"}]})"); }).find("unknown grid"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_suite(R"({"policy_overrides": {"k": "no-wa"}})"); }).find("unknown kernel"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_suite("[]"); }).find("object"), std::string::npos);
}

TEST(Suite, ShippedSuiteLoads) {
  const auto s = load_suite(STENCILWA_DATA_DIR "/cloverleaf_tiny.json");
  EXPECT_EQ(s.kernels.size(), 22u);
  EXPECT_EQ(s.grids.at("mesh").inner_extent, 15360);
}

TEST(Policy, Parse) {
  EXPECT_TRUE(std::holds_alternative<FullWa>(parse_wa_policy("full-wa")));
  EXPECT_TRUE(std::holds_alternative<NoWa>(parse_wa_policy("no-wa")));
  EXPECT_DOUBLE_EQ(std::get<Phenomenological>(parse_wa_policy("speci2m")).f, 1.2);
  EXPECT_DOUBLE_EQ(std::get<Phenomenological>(parse_wa_policy("speci2m:1.5")).f, 1.5);
  MachineModel m;
  m.speci2m_factor = 1.4;
  m.nt_factor = 1.1;
  const auto p = std::get<NtPlusSpecI2M>(parse_wa_policy("nt+speci2m", &m));
  EXPECT_DOUBLE_EQ(p.nt, 1.1);
  EXPECT_DOUBLE_EQ(p.speci2m, 1.4);
  EXPECT_THROW(parse_wa_policy("speci2m:3"), InputError);
  EXPECT_THROW(parse_wa_policy("speci2m:x"), InputError);
  EXPECT_THROW(parse_wa_policy("nt+speci2m:1.1"), InputError);
  EXPECT_THROW(parse_wa_policy("half-wa"), InputError);
}

TEST(Machine, MissingFieldIsSchemaError) {
  EXPECT_NE(error_of([] { parse_machine(R"({"name": "m"})", "m.json"); }).find("m.json: schema error"),
            std::string::npos);
}

TEST(Machine, InvariantViolation) {
  auto text = read_file(STENCILWA_DATA_DIR "/icx_8360y.json");
  auto pos = text.find("\"saturating_cores\": 9");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 21, "\"saturating_cores\": 99");
  EXPECT_NE(error_of([&] { parse_machine(text); }).find("saturating_cores"), std::string::npos);
}

TEST(Measurements, ParseAndBalance) {
  const auto rows = parse_measurements(
      "\xEF\xBB\xBF# comment\n"
      "kernel,ranks,read_gbytes,write_gbytes,call_count,timesteps,grid_points\n"
      "am04,1,1.6,0.8,2,10,10000000\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].balance(), 2.4e9 / 2e8);
}

TEST(Measurements, ColumnOrderIsFree) {
  const auto rows = parse_measurements(
      "ranks,kernel,write_gbytes,read_gbytes,grid_points,timesteps,call_count\n"
      "72,x,1,2,100,1,1\n");
  EXPECT_EQ(rows[0].kernel, "x");
  EXPECT_EQ(rows[0].ranks, 72);
  EXPECT_DOUBLE_EQ(rows[0].read_gbytes, 2);
}

TEST(Measurements, SchemaErrorsNameTheColumn) {
  EXPECT_NE(error_of([] { parse_measurements("kernel,ranks,read_gbytes,write_gbytes,call_count,timesteps\n"); })
                .find("missing column 'grid_points'"),
            std::string::npos);
  EXPECT_NE(error_of([] {
              parse_measurements("kernel,ranks,read_gbytes,write_gbytes,call_count,timesteps,grid_points,x\n");
            }).find("unexpected column 'x'"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_measurements(""); }).find("missing header"), std::string::npos);
}

TEST(Measurements, RowErrors) {
  const std::string h = "kernel,ranks,read_gbytes,write_gbytes,call_count,timesteps,grid_points\n";
  EXPECT_NE(error_of([&] { parse_measurements(h + "a,1,1.0,1,1,1\n", "m.csv"); }).find("m.csv:2:"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_measurements(h + "a,1,1;0,1,1,1,1\n"); }).find("malformed"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_measurements(h + "a,1,1,1,1,1,0\n"); }).find("positive"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_measurements(h + "a,1,-1,1,1,1,1\n"); }).find("non-negative"), std::string::npos);
}

TEST(Measurements, RoundTrip) {
  std::vector<MeasurementRecord> rows{{"am00", 72, 12.25, 3.5, 1, 400, 235929600},
                                      {"ac06", 1, 0.1, 0.2, 3, 7, 11}};
  std::ostringstream os;
  write_measurements(os, rows);
  const auto back = parse_measurements(os.str());
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].kernel, rows[i].kernel);
    EXPECT_EQ(back[i].ranks, rows[i].ranks);
    EXPECT_DOUBLE_EQ(back[i].read_gbytes, rows[i].read_gbytes);
    EXPECT_DOUBLE_EQ(back[i].write_gbytes, rows[i].write_gbytes);
    EXPECT_EQ(back[i].grid_points, rows[i].grid_points);
  }
}

TEST(Files, MissingFile) { EXPECT_THROW(read_file("/nonexistent/file.json"), InputError); }

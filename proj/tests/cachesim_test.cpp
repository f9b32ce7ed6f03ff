#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "stencilwa/balance.hpp"
#include "stencilwa/cachesim.hpp"
#include "stencilwa/io.hpp"
#include "support/oracles.hpp"
#include "support/random_kernels.hpp"

using namespace stencilwa;

namespace {

std::vector<CacheLevelConfig> one_level(std::int64_t lines) { return {{lines * 64, 64, 0}}; }

const KernelSuite& suite() {
  static const auto s = load_suite(STENCILWA_DATA_DIR "/cloverleaf_tiny.json");
  return s;
}

}  // namespace

TEST(Lru, EvictsLeastRecentlyUsed) {
  LruCache c({4 * 64, 64, 0});
  for (std::uint64_t l = 0; l < 4; ++l) EXPECT_FALSE(c.insert(l, l == 1).has_value());
  EXPECT_TRUE(c.touch(0));
  auto v = c.insert(4, false);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->line, 1u);
  EXPECT_TRUE(v->dirty);
  EXPECT_FALSE(c.contains(1));
  EXPECT_TRUE(c.contains(0));
  EXPECT_EQ(c.size(), 4u);
}

TEST(Lru, SetAssociativeConflicts) {
  LruCache c({4 * 64, 64, 2});  // 2 sets of 2 ways
  c.insert(0, false);
  c.insert(2, false);
  auto v = c.insert(4, false);  // same set as 0 and 2
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->line, 0u);
  EXPECT_FALSE(c.insert(1, false).has_value());
}

TEST(Levels, Validation) {
  EXPECT_THROW(validate_levels({}), std::invalid_argument);
  EXPECT_THROW(validate_levels({{100, 64, 0}}), std::invalid_argument);
  EXPECT_THROW(validate_levels({{1024, 48, 0}}), std::invalid_argument);
  EXPECT_THROW(validate_levels({{1024, 64, 0}, {4096, 128, 0}}), std::invalid_argument);
  EXPECT_THROW(validate_levels({{3 * 64, 64, 2}}), std::invalid_argument);
  EXPECT_NO_THROW(validate_levels({{1024, 64, 4}, {8192, 64, 0}}));
}

TEST(Simulator, SplitsAccessesAcrossLines) {
  CacheSimulator sim(one_level(8), AlwaysAllocate{});
  sim.access(60, 8, AccessMode::read);
  sim.finish();
  EXPECT_EQ(sim.traffic().read_bytes, 128);
}

TEST(Simulator, FinishIsIdempotentAndFinal) {
  CacheSimulator sim(one_level(8), AlwaysAllocate{});
  sim.access(0, 8, AccessMode::write);
  sim.finish();
  sim.finish();
  EXPECT_EQ(sim.traffic().read_bytes, 64);
  EXPECT_EQ(sim.traffic().write_bytes, 64);
  EXPECT_THROW(sim.access(0, 8, AccessMode::read), std::logic_error);
}

TEST(Simulator, RejectsBadPolicies) {
  EXPECT_THROW(CacheSimulator(one_level(8), NtBypass{0}), std::invalid_argument);
  EXPECT_THROW(CacheSimulator(one_level(8), AutoClaim{0, true}), std::invalid_argument);
}

TEST(Simulator, MatchesNaiveLruOnRandomTraces) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    EventTrace t;
    std::uniform_int_distribution<std::uint64_t> addr(0, 4095);
    std::bernoulli_distribution write(0.3);
    for (int i = 0; i < 2000; ++i)
      t.events.push_back({addr(rng) / 8 * 8, write(rng) ? AccessMode::write : AccessMode::read});
    const std::int64_t lines = 1 + round % 20;
    const auto got = simulate(t, one_level(lines), AlwaysAllocate{});
    const auto want = oracle::naive_lru(t, lines);
    EXPECT_EQ(got.read_bytes, want.read_bytes) << "lines " << lines;
    EXPECT_EQ(got.write_bytes, want.write_bytes) << "lines " << lines;
  }
}

TEST(Simulator, MemoryTrafficDependsOnLastLevelOnly) {
  const auto* k = suite().find("am00");
  const auto g = grid_for(*k, 64, 16);
  const std::int64_t llc = 64 * 64;
  const auto flat = measure_traffic(*k, g, {{llc, 64, 0}}, AlwaysAllocate{});
  const auto deep = measure_traffic(*k, g, {{8 * 64, 64, 0}, {32 * 64, 64, 4}, {llc, 64, 0}}, AlwaysAllocate{});
  EXPECT_EQ(flat, deep);
}

TEST(Simulator, LevelStatsCountHitsAndMisses) {
  CacheSimulator sim({{2 * 64, 64, 0}, {8 * 64, 64, 0}}, AlwaysAllocate{});
  for (std::uint64_t l = 0; l < 4; ++l) sim.access(l * 64, 8, AccessMode::read);
  sim.access(0, 8, AccessMode::read);  // L1 miss, L2 hit
  sim.access(192, 8, AccessMode::read);  // hit in both
  sim.finish();
  const auto& s = sim.level_stats();
  EXPECT_EQ(s[0].misses, 5);
  EXPECT_EQ(s[0].hits, 1);
  EXPECT_EQ(s[1].misses, 4);
  EXPECT_EQ(s[1].hits, 2);
}

TEST(Trace, LayoutAndOrder) {
  KernelSpec k;
  k.name = "t";
  k.arrays = {{"a"}, {"b"}};
  k.accesses = {{"b", 0, 0, AccessMode::write}, {"a", 1, 0, AccessMode::read}};
  GridSpec g{3, 2, 0, 1, 0, 0, 8};
  const auto t = gen_trace(k, g).materialize();
  ASSERT_EQ(t.events.size(), 12u);
  EXPECT_EQ(t.iterations, 6);
  // reads first, then writes
  EXPECT_EQ(t.events[0], (TraceEvent{8, AccessMode::read}));
  // b starts after a's 4 * 2 * 8 = 64 bytes
  EXPECT_EQ(t.events[1], (TraceEvent{64, AccessMode::write}));
  // next row of a starts at stride 4
  EXPECT_EQ(t.events[6], (TraceEvent{(4 + 1) * 8, AccessMode::read}));
}

TEST(Trace, EventCounts) {
  KernelSpec one;
  one.name = "one";
  one.arrays = {{"a"}};
  one.accesses = {{"a", 0, 0, AccessMode::read}};
  EXPECT_EQ(gen_trace(one, GridSpec{1, 1}).materialize().events.size(), 1u);

  const auto* am04 = suite().find("am04");
  const auto t = gen_trace(*am04, grid_for(*am04, 8, 3));
  EXPECT_EQ(t.iterations(), 24);
  EXPECT_EQ(t.materialize().events.size(), 120u);
}

TEST(Trace, CopyStreamsAscend) {
  const auto t = gen_trace(copy_kernel(), GridSpec{100, 1}).materialize();
  ASSERT_EQ(t.events.size(), 200u);
  for (std::size_t i = 2; i < t.events.size(); ++i) {
    EXPECT_EQ(t.events[i].mode, t.events[i - 2].mode);
    EXPECT_GT(t.events[i].address, t.events[i - 2].address);
  }
}

TEST(Trace, Deterministic) {
  const auto* k = suite().find("pdv01");
  const auto g = grid_for(*k, 64, 8);
  EXPECT_EQ(gen_trace(*k, g).materialize().events, gen_trace(*k, g).materialize().events);
  EXPECT_EQ(measure_traffic(*k, g, one_level(16), AutoClaim{}), measure_traffic(*k, g, one_level(16), AutoClaim{}));
}

TEST(Trace, BoundsChecked) {
  KernelSpec k;
  k.name = "t";
  k.arrays = {{"a"}};
  k.accesses = {{"a", 0, -1, AccessMode::read}};
  EXPECT_THROW(gen_trace(k, GridSpec{4, 4}), std::out_of_range);
  EXPECT_NO_THROW(gen_trace(k, grid_for(k, 4, 4)));
}

TEST(Trace, BinaryRoundTrip) {
  const auto* k = suite().find("am05");
  const auto t = gen_trace(*k, grid_for(*k, 16, 4)).materialize();
  std::stringstream ss;
  write_trace(ss, t);
  EXPECT_EQ(ss.str().size(), t.events.size() * 9);
  const auto back = read_trace(ss, 8, t.iterations);
  EXPECT_EQ(back.events, t.events);
  EXPECT_EQ(simulate(back, one_level(32), AlwaysAllocate{}), simulate(t, one_level(32), AlwaysAllocate{}));
}

TEST(Trace, LittleEndianRecord) {
  EventTrace t{{{0x0102030405060708ull, AccessMode::write}}, 8, 1};
  std::stringstream ss;
  write_trace(ss, t);
  const auto s = ss.str();
  ASSERT_EQ(s.size(), 9u);
  EXPECT_EQ(static_cast<unsigned char>(s[0]), 0x08);
  EXPECT_EQ(static_cast<unsigned char>(s[7]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(s[8]), 1);
}

TEST(Trace, RejectsMalformedInput) {
  std::stringstream truncated(std::string(13, '\0'));
  EXPECT_THROW(read_trace(truncated), std::runtime_error);
  std::string bad(9, '\0');
  bad[8] = 2;
  std::stringstream mode(bad);
  EXPECT_THROW(read_trace(mode), std::runtime_error);
}

TEST(StoreRatio, PolicyExtremes) {
  for (int s = 1; s <= 3; ++s) {
    EXPECT_DOUBLE_EQ(store_ratio(s, 4 << 20, AlwaysAllocate{}).ratio(), 2.0) << s;
    EXPECT_DOUBLE_EQ(store_ratio(s, 4 << 20, NtBypass{}).ratio(), 1.0) << s;
    EXPECT_DOUBLE_EQ(store_ratio(s, 4 << 20, AutoClaim{}).ratio(), 1.0) << s;
    EXPECT_DOUBLE_EQ(store_ratio(s, 4 << 20, AutoClaim{64, false}).ratio(), 2.0) << s;
  }
}

TEST(Simulate, CopyUnderAlwaysAllocate) {
  const auto t = halo_copy_traffic(1 << 14, 0, 8 << 20, AlwaysAllocate{});
  EXPECT_NEAR(static_cast<double>(t.read_bytes) / t.iterations, 16.0, 1e-9);
  EXPECT_NEAR(static_cast<double>(t.write_bytes) / t.iterations, 8.0, 1e-9);
}

TEST(StoreRatio, EvadedFillsAreReported) {
  const auto r = store_ratio(1, 1 << 20, AutoClaim{});
  EXPECT_EQ(r.traffic.wa_avoided_bytes, 1 << 20);
  EXPECT_EQ(r.traffic.read_bytes, 0);
}

TEST(StoreRatio, TinyWindowStillEvadesSequentialStores) {
  // one line at a time is enough when the stream never interleaves
  EXPECT_DOUBLE_EQ(store_ratio(1, 1 << 20, AutoClaim{1, true}).ratio(), 1.0);
  // three interleaved streams need three lines
  EXPECT_GT(store_ratio(3, 1 << 20, AutoClaim{2, true}).ratio(), 1.1);
  EXPECT_DOUBLE_EQ(store_ratio(3, 1 << 20, AutoClaim{3, true}).ratio(), 1.0);
}

TEST(HaloCopy, MatchesLineOccupancyOracle) {
  const std::int64_t volume = 1 << 20;
  for (std::int64_t halo = 0; halo <= 16; ++halo) {
    const auto got = halo_copy_traffic(216, halo, volume, AutoClaim{});
    const auto want = oracle::halo_copy_oracle(216, halo, volume / (216 * 8));
    EXPECT_EQ(got.read_bytes, want.read_bytes) << "halo " << halo;
    EXPECT_EQ(got.write_bytes, want.write_bytes) << "halo " << halo;
  }
}

TEST(HaloCopy, WideAlignedRows) {
  EXPECT_NEAR(halo_copy_experiment(1920, 0, 4 << 20, AutoClaim{}), 1.0, 1e-12);
  EXPECT_NEAR(halo_copy_experiment(216, 8, 4 << 20, AutoClaim{}), 1.0, 1e-12);
  EXPECT_GT(halo_copy_experiment(216, 3, 4 << 20, AutoClaim{}), 1.0);
}

TEST(HaloCopy, AlwaysAllocateIgnoresAlignment) {
  EXPECT_NEAR(halo_copy_experiment(216, 0, 1 << 20, AlwaysAllocate{}), 2.0, 1e-12);
  EXPECT_NEAR(halo_copy_experiment(216, 8, 1 << 20, AlwaysAllocate{}), 2.0, 1e-12);
}

TEST(HaloCopy, RejectsBadArguments) {
  EXPECT_THROW(halo_copy_traffic(0, 0, 1024, AutoClaim{}), std::invalid_argument);
  EXPECT_THROW(halo_copy_traffic(8, -1, 1024, AutoClaim{}), std::invalid_argument);
}

TEST(Nt, PartialLinesCostAFill) {
  CacheSimulator sim(one_level(8), NtBypass{4});
  sim.access(0, 8, AccessMode::write);
  sim.finish();
  EXPECT_EQ(sim.traffic().read_bytes, 64);
  EXPECT_EQ(sim.traffic().write_bytes, 64);
  EXPECT_EQ(sim.traffic().wa_avoided_bytes, 0);
}

TEST(Nt, ReadBackOfPendingLineComesFromMemory) {
  CacheSimulator sim(one_level(8), NtBypass{4});
  sim.access(0, 8, AccessMode::write);
  sim.access(0, 8, AccessMode::read);
  sim.access(8, 8, AccessMode::read);  // now resident
  sim.finish();
  EXPECT_EQ(sim.traffic().read_bytes, 64);
  EXPECT_EQ(sim.traffic().write_bytes, 64);
}

TEST(AutoClaim, ReadOfPendingLinePaysTheFill) {
  CacheSimulator sim(one_level(8), AutoClaim{});
  sim.access(0, 8, AccessMode::write);
  sim.access(8, 8, AccessMode::read);
  for (int b = 16; b < 64; b += 8) sim.access(b, 8, AccessMode::write);
  sim.finish();
  EXPECT_EQ(sim.traffic().read_bytes, 64);
  EXPECT_EQ(sim.traffic().write_bytes, 64);
}

TEST(AutoClaim, EvictionWhilePendingPaysTheFill) {
  CacheSimulator sim(one_level(2), AutoClaim{16, true});
  sim.access(0, 8, AccessMode::write);
  sim.access(64, 8, AccessMode::read);
  sim.access(128, 8, AccessMode::read);  // evicts line 0
  sim.finish();
  EXPECT_EQ(sim.traffic().read_bytes, 3 * 64);
  EXPECT_EQ(sim.traffic().write_bytes, 64);
}

TEST(Experiments, Am04AtSpecifiedGrid) {
  const auto* k = suite().find("am04");
  const auto g = grid_for(*k, 1024, 1024);
  const auto big = std::vector<CacheLevelConfig>{{lc_satisfying_capacity(*k, g), 64, 0}};
  EXPECT_NEAR(measure_balance(*k, g, big, AlwaysAllocate{}), 24.0, 0.5);
  EXPECT_NEAR(measure_balance(*k, g, big, AutoClaim{}), 16.0, 0.5);
  EXPECT_NEAR(measure_balance(*k, g, big, NtBypass{}), 16.0, 0.5);
}

TEST(Experiments, Am04FourLineCacheBreaksLayerCondition) {
  const auto* k = suite().find("am04");
  const auto g = grid_for(*k, 1024, 1024);
  EXPECT_NEAR(measure_balance(*k, g, one_level(4), AlwaysAllocate{}), 32.0, 0.5);
}

TEST(Experiments, CapacityHelpers) {
  const auto* k = suite().find("am04");
  const auto g = grid_for(*k, 1024, 1024);
  EXPECT_EQ(lc_satisfying_capacity(*k, g) % 64, 0);
  EXPECT_GE(lc_satisfying_capacity(*k, g), 2 * 2 * 1024 * 8);
  EXPECT_LT(lc_breaking_capacity(*k), 1024 * 8);
}

#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "stencilwa/kernel.hpp"

namespace stencilwa {

// ---------------------------------------------------------------------------
// Layer conditions
// ---------------------------------------------------------------------------

enum class LcState { fulfilled, broken };

inline const char* to_string(LcState s) { return s == LcState::fulfilled ? "fulfilled" : "broken"; }

struct ArrayLcRequirement {
  std::string array;
  int rows = 0;              // distinct read rows of this array
  std::int64_t bytes = 0;    // rows * inner_extent * element_size (0 for single-row arrays)
  LcState status = LcState::fulfilled;  // per-array check against the full effective cache
};

struct LayerConditionReport {
  std::vector<ArrayLcRequirement> per_array;
  std::int64_t total_bytes = 0;
  std::int64_t effective_cache = 0;
  LcState status = LcState::fulfilled;
};

/// Layer-condition check for one kernel: every array read in two or more rows
/// must keep those rows cached. All multi-row arrays share one effective cache.
inline LayerConditionReport layer_condition(const KernelSpec& kernel, std::int64_t inner_extent,
                                            std::int64_t effective_cache) {
  if (inner_extent < 1) throw std::invalid_argument("layer_condition: inner_extent must be >= 1");
  if (effective_cache <= 0) throw std::invalid_argument("layer_condition: effective cache must be positive");
  require_valid(kernel);

  LayerConditionReport rep;
  rep.effective_cache = effective_cache;
  for (const auto& decl : kernel.arrays) {
    auto rows = read_rows_of(kernel, decl.name);
    if (rows.empty()) continue;
    ArrayLcRequirement r{decl.name, static_cast<int>(rows.size()), 0, LcState::fulfilled};
    if (r.rows >= 2) r.bytes = r.rows * inner_extent * kernel.element_size;
    r.status = r.bytes < effective_cache ? LcState::fulfilled : LcState::broken;
    rep.total_bytes += r.bytes;
    rep.per_array.push_back(std::move(r));
  }
  rep.status = rep.total_bytes < effective_cache ? LcState::fulfilled : LcState::broken;
  return rep;
}

/// Smallest actual cache size C for which `rows * inner * element < C / 2`
/// no longer holds strictly, i.e. the threshold the cache must exceed under
/// the half-cache heuristic.
inline std::int64_t lc_cache_threshold(int rows, std::int64_t inner_extent, std::int64_t element_size = 8) {
  return 2 * static_cast<std::int64_t>(rows) * inner_extent * element_size;
}

// ---------------------------------------------------------------------------
// Write-allocate policies
// ---------------------------------------------------------------------------

struct FullWa {};
struct NoWa {};
/// Every evadable write stream pays a residual write-allocate of (f - 1).
struct Phenomenological {
  double f = 1.2;
};
/// One evadable stream uses NT stores (residual nt - 1), the rest rely on
/// automatic evasion (residual speci2m - 1).
struct NtPlusSpecI2M {
  double nt = 1.17;
  double speci2m = 1.2;
};

using WaPolicy = std::variant<FullWa, NoWa, Phenomenological, NtPlusSpecI2M>;

inline void check_factor(double f, const char* what) {
  if (!(f >= 1.0 && f <= 2.0)) throw std::invalid_argument(std::string(what) + " must lie in [1.0, 2.0]");
}

inline void validate_policy(const WaPolicy& p) {
  if (auto* ph = std::get_if<Phenomenological>(&p)) check_factor(ph->f, "phenomenological factor");
  if (auto* nt = std::get_if<NtPlusSpecI2M>(&p)) {
    check_factor(nt->nt, "NT factor");
    check_factor(nt->speci2m, "SpecI2M factor");
  }
}

inline std::string to_string(const WaPolicy& p) {
  struct V {
    std::string operator()(FullWa) const { return "full-wa"; }
    std::string operator()(NoWa) const { return "no-wa"; }
    std::string operator()(Phenomenological x) const { return "speci2m(" + std::to_string(x.f) + ")"; }
    std::string operator()(NtPlusSpecI2M x) const {
      return "nt+speci2m(" + std::to_string(x.nt) + "," + std::to_string(x.speci2m) + ")";
    }
  };
  return std::visit(V{}, p);
}

/// Sum of residual write-allocate fractions over the `evadable` write streams.
inline double residual_wa_streams(const WaPolicy& policy, int evadable) {
  validate_policy(policy);
  if (evadable <= 0) return 0.0;
  struct V {
    int n;
    double operator()(FullWa) const { return n; }
    double operator()(NoWa) const { return 0.0; }
    double operator()(Phenomenological x) const { return (x.f - 1.0) * n; }
    double operator()(NtPlusSpecI2M x) const { return (x.nt - 1.0) + (x.speci2m - 1.0) * (n - 1); }
  };
  return std::visit(V{evadable}, policy);
}

inline void check_counts(const StreamCounts& c) {
  if (c.n_arrays < 0 || c.rd_lcf < 0 || c.rd_lcb < 0 || c.wr < 0 || c.rdwr < 0 || c.rdwr > c.wr)
    throw std::invalid_argument("invalid stream counts");
}

/// Memory bytes per loop iteration.
inline double code_balance(const StreamCounts& c, LcState lc, const WaPolicy& wa, std::int64_t element_size = 8) {
  check_counts(c);
  const double reads = lc == LcState::fulfilled ? c.rd_lcf : c.rd_lcb;
  return static_cast<double>(element_size) * (reads + c.wr + residual_wa_streams(wa, c.evadable_writes()));
}

// ---------------------------------------------------------------------------
// Scenarios and classification
// ---------------------------------------------------------------------------

struct BalanceScenario {
  LcState lc = LcState::fulfilled;
  WaPolicy wa = FullWa{};
  double bytes_per_it = 0.0;  // code balance per iteration
  double intensity = 0.0;     // flops per byte

  [[nodiscard]] double code_balance() const { return bytes_per_it; }
};

inline BalanceScenario make_scenario(const KernelSpec& k, const StreamCounts& c, LcState lc, const WaPolicy& wa) {
  BalanceScenario s{lc, wa, code_balance(c, lc, wa, k.element_size), 0.0};
  s.intensity = s.bytes_per_it > 0 ? static_cast<double>(k.flops_per_it) / s.bytes_per_it : 0.0;
  return s;
}

/// The four corners of the (layer condition, write-allocate) plane.
struct ScenarioTable {
  BalanceScenario min;     // fulfilled, no WA
  BalanceScenario lcf_wa;  // fulfilled, WA
  BalanceScenario lcb;     // broken, no WA
  BalanceScenario max;     // broken, WA
};

inline ScenarioTable scenario_table(const KernelSpec& k) {
  const auto c = derive_stream_counts(k);
  return {make_scenario(k, c, LcState::fulfilled, NoWa{}), make_scenario(k, c, LcState::fulfilled, FullWa{}),
          make_scenario(k, c, LcState::broken, NoWa{}), make_scenario(k, c, LcState::broken, FullWa{})};
}

/// Scaling class by the number of write-allocates that evasion could remove.
enum class ScalingClass { i, ii, iii };

inline const char* to_string(ScalingClass c) {
  switch (c) {
    case ScalingClass::i: return "i";
    case ScalingClass::ii: return "ii";
    case ScalingClass::iii: return "iii";
  }
  return "?";
}

inline ScalingClass classify(const StreamCounts& c) {
  check_counts(c);
  const int evadable = c.evadable_writes();
  if (evadable == 0) return ScalingClass::iii;
  return evadable == 1 ? ScalingClass::i : ScalingClass::ii;
}

}  // namespace stencilwa

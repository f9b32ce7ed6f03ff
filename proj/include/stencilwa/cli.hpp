#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stencilwa/balance.hpp"
#include "stencilwa/cachesim.hpp"
#include "stencilwa/decomp.hpp"
#include "stencilwa/io.hpp"
#include "stencilwa/kernel.hpp"
#include "stencilwa/roofline.hpp"

namespace stencilwa {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitInputError = 2 };

/// Usage problem detected after parsing (bad ranges, missing combinations).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cli {

inline std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

/// Plain aligned text or CSV, depending on `csv`.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void print(std::ostream& os, bool csv) const {
    if (csv) {
      auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << "\n";
      };
      line(header_);
      for (const auto& r : rows_) line(r);
      return;
    }
    std::vector<std::size_t> w(header_.size());
    for (std::size_t i = 0; i < header_.size(); ++i) w[i] = header_[i].size();
    for (const auto& r : rows_)
      for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
    auto line = [&](const std::vector<std::string>& r) {
      std::string out;
      for (std::size_t i = 0; i < r.size(); ++i) {
        // first column left-aligned, numbers right-aligned
        const auto pad = std::string(w[i] - r[i].size(), ' ');
        if (i) out += "  ";
        out += i == 0 ? r[i] + pad : pad + r[i];
      }
      while (!out.empty() && out.back() == ' ') out.pop_back();
      os << out << "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::vector<KernelSpec> sorted_kernels(const KernelSuite& suite, const std::vector<std::string>& only) {
  std::vector<KernelSpec> out;
  for (const auto& name : only)
    if (!suite.find(name)) throw InputError("unknown kernel '" + name + "'");
  for (const auto& k : suite.kernels)
    if (only.empty() || std::find(only.begin(), only.end(), k.name) != only.end()) out.push_back(k);
  std::sort(out.begin(), out.end(), [](const KernelSpec& a, const KernelSpec& b) { return a.name < b.name; });
  return out;
}

/// Inner extent of the grid a kernel's arrays live on.
inline std::int64_t kernel_mesh(const KernelSuite& suite, const KernelSpec& k) {
  for (const auto& a : k.arrays)
    if (auto g = suite.grids.find(a.grid); g != suite.grids.end()) return g->second.inner_extent;
  throw InputError("kernel '" + k.name + "' has no grid with a known extent");
}

inline WritePolicySim parse_sim_policy(const std::string& s, int window) {
  if (s == "always-allocate") return AlwaysAllocate{};
  if (s == "nt-bypass") return NtBypass{window};
  if (s == "auto-claim") return AutoClaim{window, true};
  if (s == "auto-claim-inactive") return AutoClaim{window, false};
  throw UsageError("unknown simulator policy '" + s + "'");
}

/// Write-allocate model the analytic side should use for a simulator policy.
inline WaPolicy analytic_wa(const WritePolicySim& p) {
  if (std::holds_alternative<AlwaysAllocate>(p)) return FullWa{};
  if (auto* c = std::get_if<AutoClaim>(&p); c && !c->active) return FullWa{};
  return NoWa{};
}

inline std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw UsageError("bad range '" + s + "', expected A..B");
  }
}

struct Common {
  std::string suite;
  std::string machine;
  bool csv = false;
};

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  Common c;
  int cores = 0;  // 0 = whole node
};

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto suite = load_suite(a.c.suite);
  const auto machine = load_machine(a.c.machine);
  const int cores = a.cores > 0 ? a.cores : machine.cores_per_node();
  const double bw = effective_bandwidth(machine, cores);
  Table t({"kernel", "n_arrays", "rd_lcf", "rd_lcb", "wr", "rdwr", "flops", "min", "lcf_wa", "lcb", "max", "class",
           "mit_per_s"});
  for (const auto& k : sorted_kernels(suite, {})) {
    const auto c = derive_stream_counts(k);
    const auto s = scenario_table(k);
    // iterations/s of the whole run at the LCF+WA balance
    const double it_s = std::min(bw / s.lcf_wa.bytes_per_it,
                                 k.flops_per_it > 0 ? cores * machine.peak_flops_per_core / k.flops_per_it : INFINITY);
    t.add({k.name, std::to_string(c.n_arrays), std::to_string(c.rd_lcf), std::to_string(c.rd_lcb),
           std::to_string(c.wr), std::to_string(c.rdwr), std::to_string(k.flops_per_it), fmt(s.min.bytes_per_it, 0),
           fmt(s.lcf_wa.bytes_per_it, 0), fmt(s.lcb.bytes_per_it, 0), fmt(s.max.bytes_per_it, 0), to_string(classify(c)),
           fmt(it_s / 1e6, 1)});
  }
  t.print(out, a.c.csv);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  Common c;
  std::int64_t grid = 1024;
  std::string policy = "always-allocate";
  int window = 64;
  std::string cache_mode = "effective";
  int cores = 1;
  std::vector<std::string> kernels;
  bool check = false;
  double tolerance = 2.0;  // percent
  std::string dump_trace;
  std::string load_trace;
  std::int64_t trace_iterations = 0;
};

inline std::vector<CacheLevelConfig> machine_levels(const MachineModel& m, int cores, const std::string& mode) {
  const auto round = [&](std::int64_t b) { return std::max(m.line_size, b / m.line_size * m.line_size); };
  const int share = std::min(cores, m.cores_per_socket());
  // one level holding this process's L2 plus its share of the L3
  if (mode == "effective") return {{round(m.cache_l2 + m.cache_l3 / share), m.line_size, 0}};
  if (mode == "levels") {
    return {{round(m.cache_l1), m.line_size, 0}, {round(m.cache_l2), m.line_size, 0},
            {round(m.cache_l3 / share), m.line_size, 0}};
  }
  throw UsageError("unknown cache mode '" + mode + "'");
}

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.grid < 1) throw UsageError("--grid must be >= 1");
  if (a.cores < 1) throw UsageError("--cores must be >= 1");
  const auto machine = load_machine(a.c.machine);
  const auto policy = parse_sim_policy(a.policy, a.window);
  const auto levels = machine_levels(machine, a.cores, a.cache_mode);

  if (!a.load_trace.empty()) {
    std::ifstream in(a.load_trace, std::ios::binary);
    if (!in) throw InputError(a.load_trace + ": cannot open file");
    const auto trace = read_trace(in, 8, a.trace_iterations);
    const auto t = simulate(trace, levels, policy);
    Table tab({"events", "read_bytes", "write_bytes", "total_bytes", "bytes_per_it"});
    tab.add({std::to_string(trace.size()), std::to_string(t.read_bytes), std::to_string(t.write_bytes),
             std::to_string(t.total_bytes()), t.iterations > 0 ? fmt(t.bytes_per_it(), 3) : "-"});
    tab.print(out, a.c.csv);
    return kExitOk;
  }

  const auto suite = load_suite(a.c.suite);
  const auto kernels = sorted_kernels(suite, a.kernels);
  if (!a.dump_trace.empty()) {
    if (kernels.size() != 1) throw UsageError("--dump-trace needs exactly one --kernel");
    std::ofstream os(a.dump_trace, std::ios::binary);
    if (!os) throw InputError(a.dump_trace + ": cannot write file");
    write_trace(os, gen_trace(kernels[0], grid_for(kernels[0], a.grid, a.grid)));
  }

  Table t({"kernel", "lc", "analytic", "simulated", "delta_pct"});
  bool ok = true;
  for (const auto& k : kernels) {
    try {
      const auto lc = layer_condition(k, a.grid, effective_cache_per_process(machine, a.cores)).status;
      const double model = code_balance(derive_stream_counts(k), lc, analytic_wa(policy), k.element_size);
      const double sim = measure_balance(k, grid_for(k, a.grid, a.grid), levels, policy);
      const double delta = 100.0 * (sim - model) / model;
      if (std::abs(delta) > a.tolerance) ok = false;
      t.add({k.name, to_string(lc), fmt(model), fmt(sim), fmt(delta)});
    } catch (const std::exception& e) {
      err << "simulate: kernel '" << k.name << "': " << e.what() << "\n";
      t.add({k.name, "-", "-", "-", "error"});
      ok = false;
    }
  }
  t.print(out, a.c.csv);
  return a.check && !ok ? kExitCheckFailed : kExitOk;
}

// ---------------------------------------------------------------------------

struct PrimeSweepArgs {
  Common c;
  std::string ranks = "1..72";
  std::string policy;  // empty: the machine's SpecI2M factor
  std::int64_t mesh = 0;
  std::vector<std::string> kernels;
};

inline int cmd_prime_sweep(const PrimeSweepArgs& a, std::ostream& out) {
  const auto suite = load_suite(a.c.suite);
  const auto machine = load_machine(a.c.machine);
  const auto [lo, hi] = parse_range(a.ranks);
  if (lo < 1 || hi < lo) throw UsageError("--ranks must satisfy 1 <= A <= B");
  const WaPolicy base = a.policy.empty() ? WaPolicy{Phenomenological{machine.speci2m_factor}}
                                         : parse_wa_policy(a.policy, &machine);
  // always CSV: the sweep feeds plotters
  out << "kernel,p,bytes_per_it,prime\n";
  for (const auto& k : sorted_kernels(suite, a.kernels)) {
    const auto it = suite.policy_overrides.find(k.name);
    const auto& wa = it == suite.policy_overrides.end() ? base : it->second;
    const auto mesh = a.mesh > 0 ? a.mesh : kernel_mesh(suite, k);
    if (hi > mesh) throw UsageError("--ranks exceeds the mesh extent");
    for (const auto& pt : predict_rank_sweep(k, mesh, lo, hi, machine, wa))
      out << k.name << "," << pt.p << "," << fmt(pt.bytes_per_it, 4) << "," << (pt.prime ? 1 : 0) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  Common c;
  std::string measurements;
  std::string scenario = "lcf-wa";
  bool check = false;
  double max_mae = 10.0;            // percent
  std::optional<double> max_error;  // percent, per row
};

struct CompareRow {
  std::string kernel;
  int ranks = 1;
  double measured = 0;
  double model = 0;
  [[nodiscard]] double error_pct() const { return 100.0 * (measured - model) / measured; }
};

struct CompareResult {
  std::vector<CompareRow> rows;
  [[nodiscard]] double mean_abs_error() const {
    if (rows.empty()) return 0.0;
    double s = 0;
    for (const auto& r : rows) s += std::abs(r.error_pct());
    return s / static_cast<double>(rows.size());
  }
  [[nodiscard]] double max_abs_error() const {
    double m = 0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.error_pct()));
    return m;
  }
};

/// Model balance for one measurement row. The four fixed corners ignore the
/// rank count; the write-allocate evasion scenarios check the layer
/// condition for the local domain and honor per-kernel policy overrides.
inline double model_balance(const KernelSuite& suite, const KernelSpec& k, const MachineModel& m, int ranks,
                            const std::string& scenario) {
  const auto c = derive_stream_counts(k);
  const auto e = k.element_size;
  if (scenario == "min") return code_balance(c, LcState::fulfilled, NoWa{}, e);
  if (scenario == "lcf-wa") return code_balance(c, LcState::fulfilled, FullWa{}, e);
  if (scenario == "lcb") return code_balance(c, LcState::broken, NoWa{}, e);
  if (scenario == "max") return code_balance(c, LcState::broken, FullWa{}, e);

  WaPolicy wa;
  if (scenario == "speci2m") wa = Phenomenological{m.speci2m_factor};
  else if (scenario == "nt-speci2m") wa = NtPlusSpecI2M{m.nt_factor, m.speci2m_factor};
  else throw UsageError("unknown scenario '" + scenario + "'");
  if (auto it = suite.policy_overrides.find(k.name); it != suite.policy_overrides.end()) wa = it->second;
  const auto mesh = kernel_mesh(suite, k);
  const auto width = decompose(ranks, mesh, mesh).min_inner_width();
  const auto lc = layer_condition(k, width, effective_cache_per_process(m, ranks)).status;
  return code_balance(c, lc, wa, e);
}

inline CompareResult compare(const KernelSuite& suite, const MachineModel& m,
                             const std::vector<MeasurementRecord>& meas, const std::string& scenario) {
  CompareResult r;
  for (const auto& rec : meas) {
    const auto* k = suite.find(rec.kernel);
    if (!k) throw InputError("measurement for unknown kernel '" + rec.kernel + "'");
    r.rows.push_back({rec.kernel, rec.ranks, rec.balance(), model_balance(suite, *k, m, rec.ranks, scenario)});
  }
  std::stable_sort(r.rows.begin(), r.rows.end(), [](const CompareRow& a, const CompareRow& b) {
    return a.kernel != b.kernel ? a.kernel < b.kernel : a.ranks < b.ranks;
  });
  return r;
}

inline int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const auto suite = load_suite(a.c.suite);
  const auto machine = load_machine(a.c.machine);
  const auto meas = load_measurements(a.measurements);
  const auto r = compare(suite, machine, meas, a.scenario);
  Table t({"kernel", "ranks", "measured", "model", "error_pct"});
  for (const auto& row : r.rows)
    t.add({row.kernel, std::to_string(row.ranks), fmt(row.measured), fmt(row.model), fmt(row.error_pct())});
  t.print(out, a.c.csv);
  if (a.c.csv)
    out << "# mean_abs_error_pct," << fmt(r.mean_abs_error()) << "\n";
  else
    out << "mean abs error: " << fmt(r.mean_abs_error()) << " %  max: " << fmt(r.max_abs_error()) << " %\n";
  bool ok = r.mean_abs_error() <= a.max_mae;
  if (a.max_error) ok = ok && r.max_abs_error() <= *a.max_error;
  return a.check && !ok ? kExitCheckFailed : kExitOk;
}

// ---------------------------------------------------------------------------

struct StoreRatioArgs {
  bool csv = false;
  std::vector<int> streams{1, 2, 3};
  bool nt = false;
  std::string policy = "always-allocate";
  int window = 64;
  std::int64_t volume = 64 << 20;
  std::int64_t cache = 1 << 20;
};

inline int cmd_store_ratio(const StoreRatioArgs& a, std::ostream& out) {
  if (a.volume < 64) throw UsageError("--volume must be at least one cache line");
  const auto policy = parse_sim_policy(a.nt ? "nt-bypass" : a.policy, a.window);
  Table t({"streams", "policy", "explicit_bytes", "memory_bytes", "ratio"});
  for (int s : a.streams) {
    if (s < 1 || s > 3) throw UsageError("--streams must lie in 1..3");
    const auto r = store_ratio(s, a.volume, policy, {{a.cache, 64, 0}});
    t.add({std::to_string(s), to_string(policy), std::to_string(r.explicit_store_bytes),
           std::to_string(r.traffic.total_bytes()), fmt(r.ratio(), 4)});
  }
  t.print(out, a.csv);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct HaloCopyArgs {
  bool csv = false;
  std::int64_t inner = 216;
  std::vector<std::int64_t> halos{0, 1, 2, 3, 4, 5, 6, 7, 8, 12, 16};
  std::string policy = "auto-claim";
  int window = 64;
  std::int64_t volume = 16 << 20;
};

inline int cmd_halo_copy(const HaloCopyArgs& a, std::ostream& out) {
  if (a.inner < 1) throw UsageError("--inner must be >= 1");
  const auto policy = parse_sim_policy(a.policy, a.window);
  Table t({"halo", "read_bytes", "write_bytes", "ratio"});
  for (auto h : a.halos) {
    if (h < 0) throw UsageError("--halo must be >= 0");
    const auto tr = halo_copy_traffic(a.inner, h, a.volume, policy);
    t.add({std::to_string(h), std::to_string(tr.read_bytes), std::to_string(tr.write_bytes),
           fmt(static_cast<double>(tr.read_bytes) / static_cast<double>(tr.write_bytes), 4)});
  }
  t.print(out, a.csv);
  return kExitOk;
}

}  // namespace cli

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli;
  CLI::App app{"Stencil code balance, write-allocate and cache traffic models"};
  app.require_subcommand(1);

  auto common = [](CLI::App* sub, Common& c, bool need_suite) {
    auto* s = sub->add_option("--suite", c.suite, "kernel suite JSON")->check(CLI::ExistingFile);
    if (need_suite) s->required();
    sub->add_option("--machine", c.machine, "machine JSON")->required()->check(CLI::ExistingFile);
    sub->add_flag("--csv", c.csv, "machine-readable output");
  };

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "stream counts and code balance scenarios per kernel");
  common(analyze, an.c, true);
  analyze->add_option("--cores", an.cores, "cores for the throughput column (default: whole node)");

  SimulateArgs si;
  auto* simulate = app.add_subcommand("simulate", "trace-driven cache simulation vs. the analytic balance");
  common(simulate, si.c, false);
  simulate->add_option("--grid", si.grid, "interior extent N of the N x N grid");
  simulate->add_option("--policy", si.policy, "always-allocate | nt-bypass | auto-claim | auto-claim-inactive");
  simulate->add_option("--window", si.window, "write-combine / claim window in lines");
  simulate->add_option("--cache-mode", si.cache_mode, "effective | levels");
  simulate->add_option("--cores", si.cores, "processes sharing the socket's L3");
  simulate->add_option("--kernel", si.kernels, "restrict to these kernels");
  simulate->add_flag("--check", si.check, "exit 1 if any delta exceeds --tolerance");
  simulate->add_option("--tolerance", si.tolerance, "percent");
  simulate->add_option("--dump-trace", si.dump_trace, "write the kernel's binary trace");
  simulate->add_option("--load-trace", si.load_trace, "simulate a binary trace instead of the suite");
  simulate->add_option("--iterations", si.trace_iterations, "iterations represented by --load-trace");

  PrimeSweepArgs ps;
  auto* sweep = app.add_subcommand("prime-sweep", "predicted bytes/it per rank count (CSV)");
  common(sweep, ps.c, true);
  sweep->add_option("--ranks", ps.ranks, "A..B");
  sweep->add_option("--policy", ps.policy, "full-wa | no-wa | speci2m[:f] | nt+speci2m[:nt,f]");
  sweep->add_option("--mesh", ps.mesh, "global square mesh extent (default: from the suite)");
  sweep->add_option("--kernel", ps.kernels, "restrict to these kernels");

  CompareArgs cm;
  std::optional<double> max_error;
  auto* cmp = app.add_subcommand("compare", "measured vs. model code balance");
  common(cmp, cm.c, true);
  cmp->add_option("--measurements", cm.measurements, "measurement CSV")->required()->check(CLI::ExistingFile);
  cmp->add_option("--scenario", cm.scenario, "min | lcf-wa | lcb | max | speci2m | nt-speci2m");
  cmp->add_flag("--check", cm.check, "exit 1 if the errors exceed the limits");
  cmp->add_option("--max-mae", cm.max_mae, "mean absolute error limit, percent");
  cmp->add_option("--max-error", max_error, "per-row absolute error limit, percent");

  StoreRatioArgs sr;
  auto* store = app.add_subcommand("store-ratio", "memory traffic over explicit store volume");
  store->add_flag("--csv", sr.csv, "machine-readable output");
  store->add_option("--streams", sr.streams, "stream counts, 1..3");
  store->add_flag("--nt", sr.nt, "non-temporal stores (same as --policy nt-bypass)");
  store->add_option("--policy", sr.policy, "always-allocate | nt-bypass | auto-claim | auto-claim-inactive");
  store->add_option("--window", sr.window, "write-combine / claim window in lines");
  store->add_option("--volume", sr.volume, "bytes stored in total");
  store->add_option("--cache", sr.cache, "cache capacity in bytes");

  HaloCopyArgs hc;
  auto* halo = app.add_subcommand("halo-copy", "copy over rows with skipped halo cells");
  halo->add_flag("--csv", hc.csv, "machine-readable output");
  halo->add_option("--inner", hc.inner, "row length in elements");
  halo->add_option("--halo", hc.halos, "skipped elements per row");
  halo->add_option("--policy", hc.policy, "always-allocate | nt-bypass | auto-claim | auto-claim-inactive");
  halo->add_option("--window", hc.window, "write-combine / claim window in lines");
  halo->add_option("--volume", hc.volume, "bytes per array");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*analyze) return cmd_analyze(an, out);
    if (*simulate) {
      if (si.load_trace.empty() && si.c.suite.empty()) throw UsageError("simulate needs --suite or --load-trace");
      return cmd_simulate(si, out, err);
    }
    if (*sweep) return cmd_prime_sweep(ps, out);
    if (*cmp) {
      cm.max_error = max_error;
      return cmd_compare(cm, out);
    }
    if (*store) return cmd_store_ratio(sr, out);
    if (*halo) return cmd_halo_copy(hc, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace stencilwa

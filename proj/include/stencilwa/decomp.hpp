#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stencilwa/balance.hpp"
#include "stencilwa/kernel.hpp"
#include "stencilwa/roofline.hpp"

namespace stencilwa {

inline bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

struct RankGrid {
  int px = 1;  // cuts of the inner (x, contiguous) dimension
  int py = 1;  // cuts of the outer (y) dimension
  friend bool operator==(const RankGrid&, const RankGrid&) = default;
};

/// Rank grid for a square mesh: the outer dimension receives the smallest
/// divisor c of p with p/c <= c, the inner one gets p/c. When no such split
/// exists except the trivial one (p prime, or p = 1), the whole cut goes to
/// the inner dimension.
inline RankGrid factorize_ranks(int p) {
  if (p < 1) throw std::invalid_argument("factorize_ranks: p must be >= 1");
  int chunk_y = p;
  for (int c = 1; c <= p; ++c) {
    if (p % c == 0 && p / c <= c) {
      chunk_y = c;
      break;
    }
  }
  if (chunk_y == p) return {p, 1};
  return {p / chunk_y, chunk_y};
}

/// Splits `extent` cells into `parts` chunks differing by at most one cell;
/// the larger chunks go to the lower ranks.
inline std::vector<std::int64_t> local_extents(std::int64_t extent, int parts) {
  if (parts < 1) throw std::invalid_argument("local_extents: parts must be >= 1");
  if (extent < parts) throw std::invalid_argument("local_extents: extent smaller than number of parts");
  const std::int64_t base = extent / parts;
  const std::int64_t larger = extent % parts;
  std::vector<std::int64_t> out(static_cast<std::size_t>(parts), base);
  for (std::int64_t r = 0; r < larger; ++r) ++out[static_cast<std::size_t>(r)];
  return out;
}

struct Decomposition {
  int p = 1;
  RankGrid grid;
  std::vector<std::int64_t> local_inner_widths;
  std::vector<std::int64_t> local_outer_heights;

  [[nodiscard]] std::int64_t min_inner_width() const {
    return *std::min_element(local_inner_widths.begin(), local_inner_widths.end());
  }
};

inline Decomposition decompose(int p, std::int64_t mx, std::int64_t my) {
  Decomposition d;
  d.p = p;
  d.grid = factorize_ranks(p);
  d.local_inner_widths = local_extents(mx, d.grid.px);
  d.local_outer_heights = local_extents(my, d.grid.py);
  return d;
}

/// Relative read volume added by `extra_lines` cache lines per row of `inner`
/// elements.
inline double halo_read_overhead(std::int64_t inner, int extra_lines = 1, int line_elems = 8) {
  if (inner < 1) throw std::invalid_argument("halo_read_overhead: inner must be >= 1");
  const double extra = static_cast<double>(extra_lines) * line_elems;
  return extra / (static_cast<double>(inner) + extra);
}

struct SweepOptions {
  std::int64_t halo_elems = 5;  // halo cells per row, front and back combined
  int extra_lines = 1;
};

struct RankPoint {
  int p = 1;
  RankGrid grid;
  bool prime = false;
  std::int64_t min_inner_width = 0;
  LcState lc = LcState::fulfilled;
  double read_overhead = 0;   // relative, applied to read streams
  double write_overhead = 0;  // relative, applied to write streams and partial-line WAs
  double bytes_per_it = 0;
};

/// Code balance of one rank in the p-way decomposed run. Reads grow by the
/// halo line per row, writes by the partial lines at unaligned row ends, and
/// those partial lines always pay their write-allocate.
inline RankPoint predict_rank_point(const KernelSpec& kernel, std::int64_t mesh, int p, const MachineModel& machine,
                                    const WaPolicy& wa, const SweepOptions& opts = {}) {
  const auto counts = derive_stream_counts(kernel);
  const auto dec = decompose(p, mesh, mesh);
  const std::int64_t e = kernel.element_size;
  const int line_elems = static_cast<int>(std::max<std::int64_t>(1, machine.line_size / e));

  RankPoint pt;
  pt.p = p;
  pt.grid = dec.grid;
  pt.prime = is_prime(p);
  pt.min_inner_width = dec.min_inner_width();
  pt.lc = layer_condition(kernel, pt.min_inner_width, effective_cache_per_process(machine, p)).status;

  if (dec.grid.px > 1) {
    pt.read_overhead = halo_read_overhead(pt.min_inner_width, opts.extra_lines, line_elems);
    const bool aligned = ((pt.min_inner_width + opts.halo_elems) * e) % machine.line_size == 0;
    pt.write_overhead = aligned ? 0.0 : pt.read_overhead;
  }

  const double reads = pt.lc == LcState::fulfilled ? counts.rd_lcf : counts.rd_lcb;
  const double wa_term = residual_wa_streams(wa, counts.evadable_writes()) + counts.evadable_writes() * pt.write_overhead;
  pt.bytes_per_it = static_cast<double>(e) *
                    (reads * (1.0 + pt.read_overhead) + counts.wr * (1.0 + pt.write_overhead) + wa_term);
  return pt;
}

inline std::vector<RankPoint> predict_rank_sweep(const KernelSpec& kernel, std::int64_t mesh, int p_first, int p_last,
                                                 const MachineModel& machine, const WaPolicy& wa,
                                                 const SweepOptions& opts = {}) {
  if (p_first < 1 || p_last < p_first) throw std::invalid_argument("predict_rank_sweep: invalid rank range");
  std::vector<RankPoint> out;
  for (int p = p_first; p <= p_last; ++p) out.push_back(predict_rank_point(kernel, mesh, p, machine, wa, opts));
  return out;
}

}  // namespace stencilwa

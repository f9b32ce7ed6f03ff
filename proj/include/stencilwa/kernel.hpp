#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace stencilwa {

// ---------------------------------------------------------------------------
// Kernel intermediate representation.
//
// A kernel is one 2D loop nest `do k; do j; ...` where j is the contiguous
// (inner) dimension. Every array reference is an Access relative to the
// loop indices (j, k).
// ---------------------------------------------------------------------------

enum class AccessMode : std::uint8_t { read = 0, write = 1 };

inline const char* to_string(AccessMode m) { return m == AccessMode::read ? "read" : "write"; }

struct GridSpec {
  std::int64_t inner_extent = 1;  // j, contiguous
  std::int64_t outer_extent = 1;  // k
  std::int64_t halo_lo_inner = 0;
  std::int64_t halo_hi_inner = 0;
  std::int64_t halo_lo_outer = 0;
  std::int64_t halo_hi_outer = 0;
  std::int64_t element_size = 8;

  [[nodiscard]] std::int64_t row_stride() const { return halo_lo_inner + inner_extent + halo_hi_inner; }
  [[nodiscard]] std::int64_t allocated_rows() const { return halo_lo_outer + outer_extent + halo_hi_outer; }
  [[nodiscard]] std::int64_t allocated_bytes() const { return row_stride() * allocated_rows() * element_size; }

  /// Square grid with a symmetric halo in both dimensions.
  static GridSpec square(std::int64_t n, std::int64_t halo = 0, std::int64_t element_size = 8) {
    return GridSpec{n, n, halo, halo, halo, halo, element_size};
  }
};

/// Returns a description of each violated GridSpec invariant (empty if valid).
inline std::vector<std::string> validate_grid(const GridSpec& g) {
  std::vector<std::string> out;
  if (g.inner_extent < 1) out.push_back("grid: inner_extent must be >= 1");
  if (g.outer_extent < 1) out.push_back("grid: outer_extent must be >= 1");
  if (g.halo_lo_inner < 0 || g.halo_hi_inner < 0 || g.halo_lo_outer < 0 || g.halo_hi_outer < 0)
    out.push_back("grid: halo widths must be non-negative");
  if (g.element_size != 4 && g.element_size != 8) out.push_back("grid: element_size must be 4 or 8");
  return out;
}

struct ArrayDecl {
  std::string name;
  std::string grid = "default";  // name of the grid in the owning suite
  std::int64_t base_alignment = 64;
};

struct Access {
  std::string array;
  int dj = 0;
  int dk = 0;
  AccessMode mode = AccessMode::read;

  friend bool operator==(const Access&, const Access&) = default;
};

/// Inclusive iteration range expressed as offsets from the interior bounds:
/// the loop runs from `lo` to `extent - 1 + hi`.
struct LoopRange {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const LoopRange&, const LoopRange&) = default;
};

struct KernelSpec {
  std::string name;
  std::vector<ArrayDecl> arrays;  // declarations referenced by this kernel, in layout order
  std::vector<Access> accesses;
  std::int64_t flops_per_it = 0;
  LoopRange loop_j{};
  LoopRange loop_k{};
  std::int64_t element_size = 8;

  [[nodiscard]] const ArrayDecl* find_array(const std::string& n) const {
    auto it = std::find_if(arrays.begin(), arrays.end(), [&](const ArrayDecl& a) { return a.name == n; });
    return it == arrays.end() ? nullptr : &*it;
  }

  [[nodiscard]] std::int64_t iterations(const GridSpec& g) const {
    std::int64_t nj = g.inner_extent + loop_j.hi - loop_j.lo;
    std::int64_t nk = g.outer_extent + loop_k.hi - loop_k.lo;
    return std::max<std::int64_t>(nj, 0) * std::max<std::int64_t>(nk, 0);
  }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationOptions {
  int max_offset = 8;  // stencil radius sanity bound for |dj| and |dk|
};

struct Diagnostic {
  std::string invariant;  // short id, e.g. "duplicate-access"
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

inline std::string describe(const Access& a) {
  return a.array + "(" + std::to_string(a.dj) + "," + std::to_string(a.dk) + ")/" + to_string(a.mode);
}

inline std::vector<Diagnostic> validate(const KernelSpec& kernel, const ValidationOptions& opts = {}) {
  std::vector<Diagnostic> diags;
  auto emit = [&](std::string id, std::string msg) {
    diags.push_back({std::move(id), kernel.name + ": " + std::move(msg)});
  };

  if (kernel.name.empty()) emit("kernel-name", "kernel name must not be empty");
  if (kernel.accesses.empty()) emit("no-accesses", "kernel has no accesses");
  if (kernel.flops_per_it < 0) emit("flops", "flops_per_it must be non-negative");
  if (kernel.element_size != 4 && kernel.element_size != 8) emit("element-size", "element_size must be 4 or 8");

  std::set<std::string> names;
  for (const auto& a : kernel.arrays) {
    if (a.name.empty()) emit("array-name", "array with empty name");
    if (!names.insert(a.name).second) emit("duplicate-array", "array '" + a.name + "' declared twice");
    if (!is_power_of_two(a.base_alignment) || a.base_alignment < kernel.element_size)
      emit("alignment", "array '" + a.name + "' base_alignment must be a power of two >= element_size");
  }

  std::set<std::tuple<std::string, int, int, AccessMode>> seen;
  std::set<std::string> written;
  for (const auto& acc : kernel.accesses) {
    if (!kernel.find_array(acc.array)) emit("undeclared-array", "access " + describe(acc) + " references an undeclared array");
    if (std::abs(acc.dj) > opts.max_offset || std::abs(acc.dk) > opts.max_offset)
      emit("offset-bound", "access " + describe(acc) + " exceeds stencil radius " + std::to_string(opts.max_offset));
    if (!seen.insert({acc.array, acc.dj, acc.dk, acc.mode}).second)
      emit("duplicate-access", "access " + describe(acc) + " appears more than once");
    else if (acc.mode == AccessMode::write && !written.insert(acc.array).second)
      emit("multiple-writes", "access " + describe(acc) + " is a second write offset to the same array");
  }
  return diags;
}

inline void require_valid(const KernelSpec& kernel) {
  auto d = validate(kernel);
  if (!d.empty()) throw std::invalid_argument("invalid kernel: " + d.front().message);
}

// ---------------------------------------------------------------------------
// Stream counts
// ---------------------------------------------------------------------------

/// Per-iteration element counts that feed the analytic balance model.
struct StreamCounts {
  int n_arrays = 0;
  int rd_lcf = 0;  // reads with layer conditions fulfilled
  int rd_lcb = 0;  // reads with layer conditions broken
  int wr = 0;
  int rdwr = 0;  // writes preceded by a read of the same element

  [[nodiscard]] int evadable_writes() const { return wr - rdwr; }
  friend bool operator==(const StreamCounts&, const StreamCounts&) = default;
};

inline StreamCounts derive_stream_counts(const KernelSpec& kernel) {
  require_valid(kernel);

  std::set<std::string> touched, readers, writers;
  std::set<std::pair<std::string, int>> read_rows;
  std::set<std::tuple<std::string, int, int>> read_points;
  for (const auto& a : kernel.accesses) {
    touched.insert(a.array);
    if (a.mode == AccessMode::read) {
      readers.insert(a.array);
      read_rows.insert({a.array, a.dk});
      read_points.insert({a.array, a.dj, a.dk});
    } else {
      writers.insert(a.array);
    }
  }

  StreamCounts c;
  c.n_arrays = static_cast<int>(touched.size());
  c.rd_lcf = static_cast<int>(readers.size());
  c.rd_lcb = static_cast<int>(read_rows.size());
  c.wr = static_cast<int>(writers.size());
  for (const auto& a : kernel.accesses)
    if (a.mode == AccessMode::write && read_points.count({a.array, a.dj, a.dk})) ++c.rdwr;
  return c;
}

/// Distinct outer-dimension offsets among the read accesses of one array.
inline std::vector<int> read_rows_of(const KernelSpec& kernel, const std::string& array) {
  std::set<int> rows;
  for (const auto& a : kernel.accesses)
    if (a.array == array && a.mode == AccessMode::read) rows.insert(a.dk);
  return {rows.begin(), rows.end()};
}

}  // namespace stencilwa

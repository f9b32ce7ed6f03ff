#pragma once

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "stencilwa/kernel.hpp"

namespace stencilwa {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kMaxLineSize = 256;

struct CacheLevelConfig {
  std::int64_t capacity = 0;  // bytes
  std::int64_t line_size = 64;
  int associativity = 0;  // 0 = fully associative, otherwise ways per set
};

/// Every write miss fills the line from memory first.
struct AlwaysAllocate {};

/// Write misses go to write-combine buffers and bypass the caches. A buffer
/// that is flushed before its line is complete costs one line read.
struct NtBypass {
  int wc_lines = 64;
};

/// Automatic claim: a write-missed line is allocated without data and stays
/// "pending" while it sits in a FIFO window of `buffer_lines` store-touched
/// lines. If every byte is written inside the window, the fill is skipped.
/// Leaving the window incomplete, being read, or being evicted while pending
/// costs the fill after all. Inactive behaves like AlwaysAllocate.
struct AutoClaim {
  int buffer_lines = 64;
  bool active = true;
};

using WritePolicySim = std::variant<AlwaysAllocate, NtBypass, AutoClaim>;

inline std::string to_string(const WritePolicySim& p) {
  struct V {
    std::string operator()(AlwaysAllocate) const { return "always-allocate"; }
    std::string operator()(NtBypass x) const { return "nt-bypass(" + std::to_string(x.wc_lines) + ")"; }
    std::string operator()(AutoClaim x) const {
      return std::string("autoclaim(") + std::to_string(x.buffer_lines) + (x.active ? ",active)" : ",inactive)");
    }
  };
  return std::visit(V{}, p);
}

inline void validate_levels(const std::vector<CacheLevelConfig>& levels) {
  if (levels.empty()) throw std::invalid_argument("cache hierarchy needs at least one level");
  const auto line = levels.front().line_size;
  if (!is_power_of_two(line) || line < 8 || line > kMaxLineSize)
    throw std::invalid_argument("line_size must be a power of two in [8, 256]");
  for (const auto& l : levels) {
    if (l.line_size != line) throw std::invalid_argument("line_size must be uniform across levels");
    if (l.capacity <= 0 || l.capacity % l.line_size != 0)
      throw std::invalid_argument("capacity must be a positive multiple of line_size");
    if (l.associativity < 0) throw std::invalid_argument("associativity must be >= 0");
    if (l.associativity > 0 && (l.capacity / l.line_size) % l.associativity != 0)
      throw std::invalid_argument("capacity in lines must be a multiple of the associativity");
  }
}

// ---------------------------------------------------------------------------
// Traffic
// ---------------------------------------------------------------------------

struct MemTraffic {
  std::int64_t read_bytes = 0;
  std::int64_t write_bytes = 0;
  std::int64_t wa_avoided_bytes = 0;  // fills skipped by claiming or full-line NT flushes
  std::int64_t iterations = 0;

  [[nodiscard]] std::int64_t total_bytes() const { return read_bytes + write_bytes; }
  [[nodiscard]] double bytes_per_it() const {
    return iterations > 0 ? static_cast<double>(total_bytes()) / static_cast<double>(iterations) : 0.0;
  }
  friend bool operator==(const MemTraffic&, const MemTraffic&) = default;
};

struct LevelStats {
  std::int64_t hits = 0;
  std::int64_t misses = 0;
};

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct TraceEvent {
  std::uint64_t address = 0;
  AccessMode mode = AccessMode::read;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Materialized trace. Every event touches `element_size` bytes.
struct EventTrace {
  std::vector<TraceEvent> events;
  std::int64_t element_size = 8;
  std::int64_t iterations = 0;

  template <class F>
  void for_each(F&& f) const {
    for (const auto& e : events) f(e);
  }
  [[nodiscard]] std::size_t size() const { return events.size(); }
};

/// Lazily generated trace of one kernel on one grid. Iterates k outer and j
/// inner; inside an iteration, reads come first in declaration order, then
/// writes. All arrays share the geometry of `grid`.
class KernelTrace {
 public:
  KernelTrace(const KernelSpec& kernel, const GridSpec& grid) : grid_(grid) {
    require_valid(kernel);
    if (auto errs = validate_grid(grid); !errs.empty()) throw std::invalid_argument(errs.front());
    if (grid.element_size != kernel.element_size)
      throw std::invalid_argument("kernel and grid disagree on element_size");

    std::vector<std::uint64_t> base;
    std::uint64_t cursor = 0;
    for (const auto& a : kernel.arrays) {
      const auto align = static_cast<std::uint64_t>(a.base_alignment);
      cursor = (cursor + align - 1) / align * align;
      base.push_back(cursor);
      cursor += static_cast<std::uint64_t>(grid.allocated_bytes());
    }

    j_begin_ = kernel.loop_j.lo;
    j_end_ = grid.inner_extent + kernel.loop_j.hi;  // exclusive
    k_begin_ = kernel.loop_k.lo;
    k_end_ = grid.outer_extent + kernel.loop_k.hi;
    iterations_ = kernel.iterations(grid);

    auto push = [&](const Access& acc) {
      const auto idx = static_cast<std::size_t>(kernel.find_array(acc.array) - kernel.arrays.data());
      if (iterations_ > 0) check_bounds(acc);
      ops_.push_back({base[idx], acc.dj, acc.dk, acc.mode});
    };
    for (const auto& acc : kernel.accesses)
      if (acc.mode == AccessMode::read) push(acc);
    for (const auto& acc : kernel.accesses)
      if (acc.mode == AccessMode::write) push(acc);
  }

  template <class F>
  void for_each(F&& f) const {
    const auto e = grid_.element_size;
    const auto stride = grid_.row_stride();
    for (std::int64_t k = k_begin_; k < k_end_; ++k) {
      for (std::int64_t j = j_begin_; j < j_end_; ++j) {
        for (const auto& op : ops_) {
          const std::int64_t row = k + op.dk + grid_.halo_lo_outer;
          const std::int64_t col = j + op.dj + grid_.halo_lo_inner;
          f(TraceEvent{op.base + static_cast<std::uint64_t>((row * stride + col) * e), op.mode});
        }
      }
    }
  }

  [[nodiscard]] std::int64_t iterations() const { return iterations_; }
  [[nodiscard]] std::int64_t element_size() const { return grid_.element_size; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(iterations_) * ops_.size(); }

  [[nodiscard]] EventTrace materialize() const {
    EventTrace t{{}, element_size(), iterations_};
    t.events.reserve(size());
    for_each([&](const TraceEvent& ev) { t.events.push_back(ev); });
    return t;
  }

 private:
  struct Op {
    std::uint64_t base;
    int dj;
    int dk;
    AccessMode mode;
  };

  void check_bounds(const Access& acc) const {
    const auto j_lo = j_begin_ + acc.dj, j_hi = j_end_ - 1 + acc.dj;
    const auto k_lo = k_begin_ + acc.dk, k_hi = k_end_ - 1 + acc.dk;
    if (j_lo < -grid_.halo_lo_inner || j_hi >= grid_.inner_extent + grid_.halo_hi_inner ||
        k_lo < -grid_.halo_lo_outer || k_hi >= grid_.outer_extent + grid_.halo_hi_outer)
      throw std::out_of_range("access " + describe(acc) + " leaves the allocated grid including halos");
  }

  GridSpec grid_;
  std::vector<Op> ops_;
  std::int64_t j_begin_ = 0, j_end_ = 0, k_begin_ = 0, k_end_ = 0, iterations_ = 0;
};

inline KernelTrace gen_trace(const KernelSpec& kernel, const GridSpec& grid) { return KernelTrace(kernel, grid); }

// Binary trace format: little-endian records {u64 address, u8 mode}, packed.

inline void write_trace(std::ostream& os, const EventTrace& t) {
  char rec[9];
  for (const auto& e : t.events) {
    for (int b = 0; b < 8; ++b) rec[b] = static_cast<char>((e.address >> (8 * b)) & 0xffu);
    rec[8] = static_cast<char>(e.mode);
    os.write(rec, sizeof rec);
  }
  if (!os) throw std::runtime_error("failed to write trace");
}

template <class Trace>
void write_trace(std::ostream& os, const Trace& t) {
  write_trace(os, t.materialize());
}

inline EventTrace read_trace(std::istream& is, std::int64_t element_size = 8, std::int64_t iterations = 0) {
  EventTrace t{{}, element_size, iterations};
  unsigned char rec[9];
  while (is.read(reinterpret_cast<char*>(rec), sizeof rec)) {
    std::uint64_t addr = 0;
    for (int b = 0; b < 8; ++b) addr |= static_cast<std::uint64_t>(rec[b]) << (8 * b);
    if (rec[8] > 1) throw std::runtime_error("trace record has invalid mode byte");
    t.events.push_back({addr, static_cast<AccessMode>(rec[8])});
  }
  if (is.gcount() != 0) throw std::runtime_error("trace ends with a truncated record");
  if (t.iterations == 0) t.iterations = static_cast<std::int64_t>(t.events.size());
  return t;
}

// ---------------------------------------------------------------------------
// LRU cache level
// ---------------------------------------------------------------------------

class LruCache {
 public:
  struct Evicted {
    std::uint64_t line;
    bool dirty;
  };

  explicit LruCache(const CacheLevelConfig& cfg) {
    const auto lines = cfg.capacity / cfg.line_size;
    ways_ = cfg.associativity == 0 ? lines : cfg.associativity;
    sets_ = static_cast<std::uint64_t>(lines / ways_);
    nodes_.reserve(static_cast<std::size_t>(lines));
    heads_.assign(sets_, kNil);
    tails_.assign(sets_, kNil);
    fill_.assign(sets_, 0);
    index_.reserve(static_cast<std::size_t>(lines) * 2);
  }

  [[nodiscard]] bool contains(std::uint64_t line) const { return index_.count(line) != 0; }

  /// Moves `line` to MRU if present.
  bool touch(std::uint64_t line) {
    auto it = index_.find(line);
    if (it == index_.end()) return false;
    const auto n = it->second;
    const auto s = set_of(line);
    if (heads_[s] != n) {
      unlink(s, n);
      push_front(s, n);
    }
    return true;
  }

  /// Inserts an absent line as MRU and returns the victim, if any.
  std::optional<Evicted> insert(std::uint64_t line, bool dirty) {
    const auto s = set_of(line);
    std::optional<Evicted> victim;
    std::uint32_t n;
    if (fill_[s] == ways_) {
      n = tails_[s];
      victim = Evicted{nodes_[n].line, nodes_[n].dirty};
      index_.erase(nodes_[n].line);
      unlink(s, n);
    } else if (!free_.empty()) {
      n = free_.back();
      free_.pop_back();
      ++fill_[s];
    } else {
      n = static_cast<std::uint32_t>(nodes_.size());
      nodes_.push_back({});
      ++fill_[s];
    }
    nodes_[n].line = line;
    nodes_[n].dirty = dirty;
    push_front(s, n);
    index_.emplace(line, n);
    return victim;
  }

  /// Removes a line; returns its dirty flag, or nullopt if absent.
  std::optional<bool> erase(std::uint64_t line) {
    auto it = index_.find(line);
    if (it == index_.end()) return std::nullopt;
    const auto n = it->second;
    const auto s = set_of(line);
    const bool dirty = nodes_[n].dirty;
    unlink(s, n);
    index_.erase(it);
    --fill_[s];
    free_.push_back(n);
    return dirty;
  }

  void set_dirty(std::uint64_t line) {
    if (auto it = index_.find(line); it != index_.end()) nodes_[it->second].dirty = true;
  }

  template <class F>
  void for_each_line(F&& f) const {
    for (std::uint64_t s = 0; s < sets_; ++s)
      for (auto n = heads_[s]; n != kNil; n = nodes_[n].next) f(nodes_[n].line, nodes_[n].dirty);
  }

  [[nodiscard]] std::size_t size() const { return index_.size(); }

 private:
  static constexpr std::uint32_t kNil = 0xffffffffu;
  struct Node {
    std::uint64_t line = 0;
    std::uint32_t prev = kNil;
    std::uint32_t next = kNil;
    bool dirty = false;
  };

  [[nodiscard]] std::uint64_t set_of(std::uint64_t line) const { return sets_ == 1 ? 0 : line % sets_; }

  void unlink(std::uint64_t s, std::uint32_t n) {
    auto& node = nodes_[n];
    if (node.prev != kNil) nodes_[node.prev].next = node.next; else heads_[s] = node.next;
    if (node.next != kNil) nodes_[node.next].prev = node.prev; else tails_[s] = node.prev;
    node.prev = node.next = kNil;
  }

  void push_front(std::uint64_t s, std::uint32_t n) {
    nodes_[n].prev = kNil;
    nodes_[n].next = heads_[s];
    if (heads_[s] != kNil) nodes_[heads_[s]].prev = n;
    heads_[s] = n;
    if (tails_[s] == kNil) tails_[s] = n;
  }

  std::int64_t ways_ = 1;
  std::uint64_t sets_ = 1;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> free_;
  std::vector<std::uint32_t> heads_, tails_;
  std::vector<std::int64_t> fill_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

// ---------------------------------------------------------------------------
// Hierarchy simulator
// ---------------------------------------------------------------------------

/// Inclusive write-back hierarchy at line granularity. Every access updates
/// the recency of every level, so the last level sees the full access stream
/// and behaves like a standalone LRU. Dirty state lives in the last level.
class CacheSimulator {
 public:
  CacheSimulator(std::vector<CacheLevelConfig> levels, WritePolicySim policy, std::int64_t access_size = 8)
      : policy_(policy), access_size_(access_size) {
    validate_levels(levels);
    if (access_size <= 0) throw std::invalid_argument("access size must be positive");
    line_ = levels.front().line_size;
    for (const auto& l : levels) levels_.emplace_back(l);
    stats_.resize(levels_.size());
    if (const auto* nt = std::get_if<NtBypass>(&policy_); nt && nt->wc_lines < 1)
      throw std::invalid_argument("NtBypass wc_lines must be >= 1");
    if (const auto* ac = std::get_if<AutoClaim>(&policy_); ac && ac->buffer_lines < 1)
      throw std::invalid_argument("AutoClaim buffer_lines must be >= 1");
  }

  void access(const TraceEvent& ev) { access(ev.address, access_size_, ev.mode); }

  void access(std::uint64_t address, std::int64_t size, AccessMode mode) {
    if (finished_) throw std::logic_error("CacheSimulator: access after finish()");
    const auto line_bytes = static_cast<std::uint64_t>(line_);
    std::uint64_t addr = address;
    auto remaining = static_cast<std::uint64_t>(size);
    while (remaining > 0) {
      const std::uint64_t line = addr / line_bytes;
      const std::uint64_t off = addr % line_bytes;
      const std::uint64_t n = std::min(remaining, line_bytes - off);
      if (mode == AccessMode::read)
        read_line(line);
      else
        write_line(line, static_cast<int>(off), static_cast<int>(n));
      addr += n;
      remaining -= n;
    }
  }

  /// Resolves pending buffers and writes back every dirty line.
  void finish() {
    if (finished_) return;
    while (!fifo_.empty()) {
      const auto [line, seq] = fifo_.front();
      fifo_.pop_front();
      auto it = pending_.find(line);
      if (it != pending_.end() && it->second.seq == seq) resolve_incomplete(line);
    }
    last().for_each_line([&](std::uint64_t, bool dirty) {
      if (dirty) traffic_.write_bytes += line_;
    });
    finished_ = true;
  }

  [[nodiscard]] const MemTraffic& traffic() const { return traffic_; }
  [[nodiscard]] const std::vector<LevelStats>& level_stats() const { return stats_; }
  void set_iterations(std::int64_t n) { traffic_.iterations = n; }

 private:
  struct Pending {
    std::bitset<kMaxLineSize> mask;
    std::uint64_t seq = 0;
  };

  LruCache& last() { return levels_.back(); }

  [[nodiscard]] bool claiming() const {
    const auto* ac = std::get_if<AutoClaim>(&policy_);
    return ac && ac->active;
  }
  [[nodiscard]] bool nt() const { return std::holds_alternative<NtBypass>(policy_); }
  [[nodiscard]] std::size_t window() const {
    if (const auto* ac = std::get_if<AutoClaim>(&policy_)) return static_cast<std::size_t>(ac->buffer_lines);
    if (const auto* n = std::get_if<NtBypass>(&policy_)) return static_cast<std::size_t>(n->wc_lines);
    return 0;
  }

  void read_line(std::uint64_t line) {
    if (auto it = pending_.find(line); it != pending_.end()) {
      // A partially written line is read back: the missing bytes must come
      // from memory either way.
      pending_.erase(it);
      traffic_.read_bytes += line_;
      if (nt()) install(line, true);
      else hit(line);
      return;
    }
    if (last().contains(line)) {
      hit(line);
      return;
    }
    record_misses();
    traffic_.read_bytes += line_;
    install(line, false);
  }

  void write_line(std::uint64_t line, int off, int n) {
    if (auto it = pending_.find(line); it != pending_.end()) {
      for (int b = off; b < off + n; ++b) it->second.mask.set(static_cast<std::size_t>(b));
      if (!nt()) hit(line);
      if (static_cast<std::int64_t>(it->second.mask.count()) == line_) complete(it);
      return;
    }
    if (last().contains(line)) {
      hit(line);
      last().set_dirty(line);
      return;
    }
    record_misses();
    if (!claiming() && !nt()) {
      traffic_.read_bytes += line_;
      install(line, true);
      return;
    }
    if (claiming()) install(line, true);
    Pending p;
    for (int b = off; b < off + n; ++b) p.mask.set(static_cast<std::size_t>(b));
    p.seq = ++seq_;
    auto [it, inserted] = pending_.emplace(line, p);
    if (static_cast<std::int64_t>(p.mask.count()) == line_) {
      complete(it);
      return;
    }
    fifo_.emplace_back(line, p.seq);
    trim_window();
  }

  void complete(std::unordered_map<std::uint64_t, Pending>::iterator it) {
    traffic_.wa_avoided_bytes += line_;
    if (nt()) traffic_.write_bytes += line_;
    pending_.erase(it);
  }

  void trim_window() {
    while (pending_.size() > window() && !fifo_.empty()) {
      const auto [line, seq] = fifo_.front();
      fifo_.pop_front();
      auto it = pending_.find(line);
      if (it != pending_.end() && it->second.seq == seq) resolve_incomplete(line);
    }
    // Drop stale heads so the deque does not grow without bound.
    while (!fifo_.empty()) {
      auto it = pending_.find(fifo_.front().first);
      if (it != pending_.end() && it->second.seq == fifo_.front().second) break;
      fifo_.pop_front();
    }
  }

  void resolve_incomplete(std::uint64_t line) {
    pending_.erase(line);
    traffic_.read_bytes += line_;
    if (nt()) traffic_.write_bytes += line_;
  }

  void record_misses() {
    for (auto& s : stats_) ++s.misses;
  }

  void hit(std::uint64_t line) {
    const auto n = levels_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (levels_[i].touch(line)) {
        ++stats_[i].hits;
      } else {
        ++stats_[i].misses;
        levels_[i].insert(line, false);
      }
    }
    levels_.back().touch(line);
    ++stats_.back().hits;
  }

  void install(std::uint64_t line, bool dirty) {
    const auto n = levels_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!levels_[i].touch(line)) levels_[i].insert(line, false);
    }
    if (last().touch(line)) {
      if (dirty) last().set_dirty(line);
      return;
    }
    if (auto victim = last().insert(line, dirty)) {
      for (std::size_t i = 0; i + 1 < n; ++i) levels_[i].erase(victim->line);
      if (auto it = pending_.find(victim->line); it != pending_.end()) {
        pending_.erase(it);
        traffic_.read_bytes += line_;  // the claim never completed
      }
      if (victim->dirty) traffic_.write_bytes += line_;
    }
  }

  std::vector<LruCache> levels_;
  std::vector<LevelStats> stats_;
  WritePolicySim policy_;
  std::int64_t access_size_;
  std::int64_t line_ = 64;
  MemTraffic traffic_;
  std::unordered_map<std::uint64_t, Pending> pending_;
  std::deque<std::pair<std::uint64_t, std::uint64_t>> fifo_;
  std::uint64_t seq_ = 0;
  bool finished_ = false;
};

template <class Trace>
MemTraffic simulate(const Trace& trace, const std::vector<CacheLevelConfig>& levels, const WritePolicySim& policy) {
  CacheSimulator sim(levels, policy, trace.element_size());
  trace.for_each([&](const TraceEvent& ev) { sim.access(ev); });
  sim.finish();
  sim.set_iterations(trace.iterations());
  return sim.traffic();
}

inline MemTraffic simulate(const EventTrace& trace, const std::vector<CacheLevelConfig>& levels,
                           const WritePolicySim& policy) {
  CacheSimulator sim(levels, policy, trace.element_size);
  trace.for_each([&](const TraceEvent& ev) { sim.access(ev); });
  sim.finish();
  sim.set_iterations(trace.iterations);
  return sim.traffic();
}

inline MemTraffic measure_traffic(const KernelSpec& kernel, const GridSpec& grid,
                                  const std::vector<CacheLevelConfig>& levels, const WritePolicySim& policy) {
  return simulate(gen_trace(kernel, grid), levels, policy);
}

/// Simulated memory bytes per loop iteration.
inline double measure_balance(const KernelSpec& kernel, const GridSpec& grid,
                              const std::vector<CacheLevelConfig>& levels, const WritePolicySim& policy) {
  return measure_traffic(kernel, grid, levels, policy).bytes_per_it();
}

// ---------------------------------------------------------------------------
// Canonical experiments
// ---------------------------------------------------------------------------

/// Grid wide enough for every offset of `kernel` around an n x m interior.
inline GridSpec grid_for(const KernelSpec& kernel, std::int64_t inner, std::int64_t outer) {
  GridSpec g{inner, outer, 0, 0, 0, 0, kernel.element_size};
  for (const auto& a : kernel.accesses) {
    g.halo_lo_inner = std::max<std::int64_t>(g.halo_lo_inner, -(a.dj + kernel.loop_j.lo));
    g.halo_hi_inner = std::max<std::int64_t>(g.halo_hi_inner, a.dj + kernel.loop_j.hi);
    g.halo_lo_outer = std::max<std::int64_t>(g.halo_lo_outer, -(a.dk + kernel.loop_k.lo));
    g.halo_hi_outer = std::max<std::int64_t>(g.halo_hi_outer, a.dk + kernel.loop_k.hi);
  }
  return g;
}

/// Capacity (bytes, whole lines) that keeps every row any array touches
/// during two consecutive row sweeps resident, with a factor-two margin.
inline std::int64_t lc_satisfying_capacity(const KernelSpec& kernel, const GridSpec& grid,
                                           std::int64_t line_size = 64) {
  std::int64_t rows = 0;
  for (const auto& decl : kernel.arrays) {
    std::set<int> dks;
    for (const auto& a : kernel.accesses)
      if (a.array == decl.name) dks.insert(a.dk);
    if (!dks.empty()) rows += static_cast<std::int64_t>(dks.size()) + 1;
  }
  const auto row_bytes = grid.row_stride() * grid.element_size;
  const auto bytes = 2 * rows * row_bytes;
  return (bytes + line_size - 1) / line_size * line_size;
}

/// Four lines per row stream: enough for the reuse inside a row, far too
/// little for any reuse across rows.
inline std::int64_t lc_breaking_capacity(const KernelSpec& kernel, std::int64_t line_size = 64,
                                         std::int64_t lines_per_stream = 4) {
  std::set<std::pair<std::string, int>> rows;
  for (const auto& a : kernel.accesses) rows.insert({a.array, a.dk});
  return lines_per_stream * static_cast<std::int64_t>(rows.size()) * line_size;
}

/// Kernel storing `streams` independent arrays, `volume` bytes in total.
inline KernelSpec store_kernel(int streams, std::int64_t element_size = 8) {
  if (streams < 1) throw std::invalid_argument("store kernel needs at least one stream");
  KernelSpec k;
  k.name = "store" + std::to_string(streams);
  k.element_size = element_size;
  for (int s = 0; s < streams; ++s) {
    k.arrays.push_back({"s" + std::to_string(s), "default", 64});
    k.accesses.push_back({"s" + std::to_string(s), 0, 0, AccessMode::write});
  }
  return k;
}

struct StoreRatioResult {
  MemTraffic traffic;
  std::int64_t explicit_store_bytes = 0;
  [[nodiscard]] double ratio() const {
    return explicit_store_bytes > 0 ? static_cast<double>(traffic.total_bytes()) / explicit_store_bytes : 0.0;
  }
};

/// Actual memory traffic over explicitly stored bytes for an n-stream store
/// kernel writing `volume` bytes in total.
inline StoreRatioResult store_ratio(int streams, std::int64_t volume, const WritePolicySim& policy,
                                    std::vector<CacheLevelConfig> levels = {{1 << 20, 64, 0}}) {
  const auto kernel = store_kernel(streams);
  validate_levels(levels);
  // whole lines per stream, so every stream stays line aligned
  const std::int64_t line_elems = levels.front().line_size / kernel.element_size;
  const std::int64_t per_stream =
      std::max<std::int64_t>(1, volume / (streams * kernel.element_size) / line_elems) * line_elems;
  GridSpec g{per_stream, 1, 0, 0, 0, 0, kernel.element_size};
  StoreRatioResult r;
  r.traffic = simulate(gen_trace(kernel, g), levels, policy);
  r.explicit_store_bytes = per_stream * streams * kernel.element_size;
  return r;
}

/// `a(:) = b(:)` over rows of `inner` elements separated by `halo` skipped
/// elements; returns read bytes over write bytes.
inline KernelSpec copy_kernel() {
  KernelSpec k;
  k.name = "copy";
  k.arrays = {{"a", "default", 64}, {"b", "default", 64}};
  k.accesses = {{"b", 0, 0, AccessMode::read}, {"a", 0, 0, AccessMode::write}};
  return k;
}

inline MemTraffic halo_copy_traffic(std::int64_t inner, std::int64_t halo, std::int64_t total_bytes,
                                    const WritePolicySim& policy,
                                    std::vector<CacheLevelConfig> levels = {{1 << 20, 64, 0}}) {
  if (inner < 1) throw std::invalid_argument("halo copy: inner must be >= 1");
  if (halo < 0) throw std::invalid_argument("halo copy: halo must be >= 0");
  const auto kernel = copy_kernel();
  const auto rows = std::max<std::int64_t>(1, total_bytes / (inner * kernel.element_size));
  GridSpec g{inner, rows, 0, halo, 0, 0, kernel.element_size};
  return simulate(gen_trace(kernel, g), levels, policy);
}

inline double halo_copy_experiment(std::int64_t inner, std::int64_t halo, std::int64_t total_bytes,
                                   const WritePolicySim& policy,
                                   std::vector<CacheLevelConfig> levels = {{1 << 20, 64, 0}}) {
  const auto t = halo_copy_traffic(inner, halo, total_bytes, policy, std::move(levels));
  return t.write_bytes > 0 ? static_cast<double>(t.read_bytes) / static_cast<double>(t.write_bytes) : 0.0;
}

}  // namespace stencilwa

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stencilwa/balance.hpp"
#include "stencilwa/kernel.hpp"

namespace stencilwa {

/// Node description. Bandwidth saturates per ccNUMA domain; cores are filled
/// compactly, one domain after the other.
struct MachineModel {
  std::string name;
  double peak_flops_per_core = 0;  // flop/s
  double mem_bw_per_domain = 0;    // byte/s, saturated
  int cores_per_domain = 1;
  int domains_per_socket = 1;
  int domains_per_node = 1;
  int saturating_cores = 1;
  std::int64_t cache_l1 = 0;  // per core
  std::int64_t cache_l2 = 0;  // per core
  std::int64_t cache_l3 = 0;  // per socket
  std::int64_t line_size = 64;
  double clock_hz = 0;
  double speci2m_factor = 1.2;  // store ratio under automatic WA evasion
  double nt_factor = 1.17;      // store ratio with NT stores
  int speci2m_activation_cores = 1;
  std::string notes;

  [[nodiscard]] int cores_per_socket() const { return cores_per_domain * domains_per_socket; }
  [[nodiscard]] int cores_per_node() const { return cores_per_domain * domains_per_node; }
};

inline std::vector<std::string> validate_machine(const MachineModel& m) {
  std::vector<std::string> out;
  auto pos = [&](double v, const char* what) {
    if (!(v > 0)) out.push_back(std::string("machine: ") + what + " must be positive");
  };
  pos(m.peak_flops_per_core, "peak_flops_per_core");
  pos(m.mem_bw_per_domain, "mem_bw_per_domain");
  pos(m.cores_per_domain, "cores_per_domain");
  pos(m.domains_per_socket, "domains_per_socket");
  pos(m.domains_per_node, "domains_per_node");
  pos(m.saturating_cores, "saturating_cores");
  pos(static_cast<double>(m.cache_l1), "cache_l1");
  pos(static_cast<double>(m.cache_l2), "cache_l2");
  pos(static_cast<double>(m.cache_l3), "cache_l3");
  pos(static_cast<double>(m.line_size), "line_size");
  pos(m.clock_hz, "clock_hz");
  pos(m.speci2m_activation_cores, "speci2m_activation_cores");
  if (m.saturating_cores > m.cores_per_domain) out.push_back("machine: saturating_cores exceeds cores_per_domain");
  if (m.domains_per_node % m.domains_per_socket != 0 && m.domains_per_socket > 0)
    out.push_back("machine: domains_per_node must be a multiple of domains_per_socket");
  if (!(m.speci2m_factor >= 1.0 && m.speci2m_factor <= 2.0)) out.push_back("machine: speci2m_factor must lie in [1, 2]");
  if (!(m.nt_factor >= 1.0 && m.nt_factor <= 2.0)) out.push_back("machine: nt_factor must lie in [1, 2]");
  return out;
}

/// Attainable memory bandwidth for `cores` compactly pinned processes.
inline double effective_bandwidth(const MachineModel& m, int cores) {
  if (cores < 1) throw std::invalid_argument("effective_bandwidth: cores must be >= 1");
  double bw = 0;
  int remaining = std::min(cores, m.cores_per_node());
  while (remaining > 0) {
    const int here = std::min(remaining, m.cores_per_domain);
    bw += std::min(static_cast<double>(here) / m.saturating_cores, 1.0) * m.mem_bw_per_domain;
    remaining -= here;
  }
  return bw;
}

/// Per-process share of L2 + L3 halved; the usual safety margin for layer
/// conditions.
inline std::int64_t effective_cache_per_process(const MachineModel& m, int ranks) {
  if (ranks < 1) throw std::invalid_argument("effective_cache_per_process: ranks must be >= 1");
  const int on_socket = std::min(ranks, m.cores_per_socket());
  return (m.cache_l2 + m.cache_l3 / on_socket) / 2;
}

/// True when automatic write-allocate evasion is expected to be active.
inline bool speci2m_active(const MachineModel& m, int cores) { return cores >= m.speci2m_activation_cores; }

enum class Bound { memory, core };

inline const char* to_string(Bound b) { return b == Bound::memory ? "memory" : "core"; }

struct Prediction {
  double performance = 0;  // flop/s
  Bound bound = Bound::memory;
  double compute_roof = 0;  // cores * peak
  double memory_roof = 0;   // intensity * bandwidth
};

inline Prediction roofline_predict(double intensity, const MachineModel& m, int cores) {
  if (cores < 1) throw std::invalid_argument("roofline_predict: cores must be >= 1");
  if (intensity < 0) throw std::invalid_argument("roofline_predict: intensity must be non-negative");
  Prediction p;
  p.compute_roof = cores * m.peak_flops_per_core;
  p.memory_roof = std::isinf(intensity) ? std::numeric_limits<double>::infinity()
                                        : intensity * effective_bandwidth(m, cores);
  if (p.memory_roof < p.compute_roof) {
    p.performance = p.memory_roof;
    p.bound = Bound::memory;
  } else {
    p.performance = p.compute_roof;
    p.bound = Bound::core;
  }
  return p;
}

struct RuntimeEstimate {
  double seconds = 0;
  double memory_seconds = 0;
  double core_seconds = 0;
  Bound bound = Bound::memory;
};

/// Time for one sweep of `kernel` over `grid` under `scenario`.
inline RuntimeEstimate kernel_runtime(const KernelSpec& kernel, const GridSpec& grid, const MachineModel& m, int cores,
                                      const BalanceScenario& scenario) {
  const double iters = static_cast<double>(kernel.iterations(grid));
  RuntimeEstimate r;
  r.memory_seconds = iters * scenario.bytes_per_it / effective_bandwidth(m, cores);
  r.core_seconds = iters * static_cast<double>(kernel.flops_per_it) / (cores * m.peak_flops_per_core);
  if (r.memory_seconds >= r.core_seconds) {
    r.seconds = r.memory_seconds;
    r.bound = Bound::memory;
  } else {
    r.seconds = r.core_seconds;
    r.bound = Bound::core;
  }
  return r;
}

}  // namespace stencilwa

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stencilwa/balance.hpp"
#include "stencilwa/kernel.hpp"
#include "stencilwa/roofline.hpp"

namespace stencilwa {

/// Malformed or inconsistent input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

inline nlohmann::json parse_json(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the byte just past the offending token
    const auto at = e.byte > 0 ? e.byte - 1 : 0;
    throw InputError(origin + ":" + line_col(text, at) + ": JSON parse error: " + e.what());
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Write-allocate policy names
// ---------------------------------------------------------------------------

/// Parses "full-wa", "no-wa", "speci2m[:f]", "nt+speci2m[:nt,f]".
inline WaPolicy parse_wa_policy(const std::string& text, const MachineModel* machine = nullptr) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        args.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw InputError("bad factor '" + item + "' in policy '" + text + "'");
      }
    }
  }
  const double f = machine ? machine->speci2m_factor : 1.2;
  const double nt = machine ? machine->nt_factor : 1.17;
  WaPolicy p;
  if (head == "full-wa" && args.empty()) p = FullWa{};
  else if (head == "no-wa" && args.empty()) p = NoWa{};
  else if (head == "speci2m" && args.size() <= 1) p = Phenomenological{args.empty() ? f : args[0]};
  else if (head == "nt+speci2m" && (args.empty() || args.size() == 2))
    p = NtPlusSpecI2M{args.empty() ? nt : args[0], args.empty() ? f : args[1]};
  else throw InputError("unknown write-allocate policy '" + text + "'");
  try {
    validate_policy(p);
  } catch (const std::invalid_argument& e) {
    throw InputError("policy '" + text + "': " + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Kernel suites
// ---------------------------------------------------------------------------

struct KernelSuite {
  std::map<std::string, GridSpec> grids;
  std::vector<ArrayDecl> arrays;
  std::vector<KernelSpec> kernels;
  std::map<std::string, WaPolicy> policy_overrides;  // kernel name -> policy used instead of the scenario's

  [[nodiscard]] const KernelSpec* find(const std::string& name) const {
    auto it = std::find_if(kernels.begin(), kernels.end(), [&](const KernelSpec& k) { return k.name == name; });
    return it == kernels.end() ? nullptr : &*it;
  }
};

inline KernelSuite parse_suite(const std::string& text, const std::string& origin = "<suite>") {
  const auto j = detail::parse_json(text, origin);
  KernelSuite suite;
  auto fail = [&](const std::string& msg) -> InputError { return InputError(origin + ": " + msg); };

  try {
    if (!j.is_object()) throw fail("top level must be an object");
    const auto grids = j.value("grids", nlohmann::json::object());
    const auto arrays = j.value("arrays", nlohmann::json::array());
    const auto kernels = j.value("kernels", nlohmann::json::array());
    const auto overrides = j.value("policy_overrides", nlohmann::json::object());
    for (const auto& [name, g] : grids.items()) {
      GridSpec grid;
      grid.inner_extent = g.at("inner_extent").get<std::int64_t>();
      grid.outer_extent = g.at("outer_extent").get<std::int64_t>();
      const auto lo = detail::get_or<std::vector<std::int64_t>>(g, "halo_lo", {0, 0});
      const auto hi = detail::get_or<std::vector<std::int64_t>>(g, "halo_hi", {0, 0});
      if (lo.size() != 2 || hi.size() != 2) throw fail("grid '" + name + "': halo_lo/halo_hi need two entries");
      grid.halo_lo_inner = lo[0];
      grid.halo_lo_outer = lo[1];
      grid.halo_hi_inner = hi[0];
      grid.halo_hi_outer = hi[1];
      grid.element_size = detail::get_or<std::int64_t>(g, "element_size", 8);
      if (auto errs = validate_grid(grid); !errs.empty()) throw fail("grid '" + name + "': " + errs.front());
      suite.grids[name] = grid;
    }

    for (const auto& a : arrays) {
      ArrayDecl d{a.at("name").get<std::string>(), detail::get_or<std::string>(a, "grid", "default"),
                  detail::get_or<std::int64_t>(a, "base_alignment", 64)};
      if (std::any_of(suite.arrays.begin(), suite.arrays.end(), [&](const ArrayDecl& x) { return x.name == d.name; }))
        throw fail("array '" + d.name + "' declared twice");
      if (!suite.grids.count(d.grid) && d.grid != "default") throw fail("array '" + d.name + "' uses unknown grid '" + d.grid + "'");
      suite.arrays.push_back(std::move(d));
    }

    for (const auto& kj : kernels) {
      KernelSpec k;
      k.name = kj.at("name").get<std::string>();
      k.flops_per_it = detail::get_or<std::int64_t>(kj, "flops_per_it", 0);
      if (auto r = kj.find("loop_j"); r != kj.end()) k.loop_j = {r->at(0).get<int>(), r->at(1).get<int>()};
      if (auto r = kj.find("loop_k"); r != kj.end()) k.loop_k = {r->at(0).get<int>(), r->at(1).get<int>()};
      for (const auto& aj : kj.at("accesses")) {
        Access acc;
        acc.array = aj.at("array").get<std::string>();
        acc.dj = aj.value("dj", 0);
        acc.dk = aj.value("dk", 0);
        const auto mode = aj.at("mode").get<std::string>();
        if (mode == "read") acc.mode = AccessMode::read;
        else if (mode == "write") acc.mode = AccessMode::write;
        else throw fail("kernel '" + k.name + "': access mode must be \"read\" or \"write\", got \"" + mode + "\"");
        k.accesses.push_back(acc);
        if (!k.find_array(acc.array)) {
          auto decl = std::find_if(suite.arrays.begin(), suite.arrays.end(),
                                   [&](const ArrayDecl& x) { return x.name == acc.array; });
          if (decl != suite.arrays.end()) k.arrays.push_back(*decl);
        }
      }
      std::int64_t element = 0;
      for (const auto& a : k.arrays) {
        auto g = suite.grids.find(a.grid);
        const std::int64_t e = g == suite.grids.end() ? 8 : g->second.element_size;
        if (element != 0 && e != element) throw fail("kernel '" + k.name + "': arrays disagree on element_size");
        element = e;
      }
      k.element_size = element == 0 ? 8 : element;
      if (auto d = validate(k); !d.empty()) throw fail(d.front().message);
      if (suite.find(k.name)) throw fail("kernel '" + k.name + "' defined twice");
      suite.kernels.push_back(std::move(k));
    }

    for (const auto& [name, pol] : overrides.items()) {
      if (!suite.find(name)) throw fail("policy override for unknown kernel '" + name + "'");
      suite.policy_overrides[name] = parse_wa_policy(pol.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("schema error: ") + e.what());
  }
  return suite;
}

inline KernelSuite load_suite(const std::string& path) { return parse_suite(read_file(path), path); }

// ---------------------------------------------------------------------------
// Machine configs
// ---------------------------------------------------------------------------

inline MachineModel parse_machine(const std::string& text, const std::string& origin = "<machine>") {
  const auto j = detail::parse_json(text, origin);
  MachineModel m;
  try {
    m.name = j.at("name").get<std::string>();
    m.peak_flops_per_core = j.at("peak_flops_per_core").get<double>();
    m.mem_bw_per_domain = j.at("mem_bw_per_domain").get<double>();
    m.cores_per_domain = j.at("cores_per_domain").get<int>();
    m.domains_per_socket = j.at("domains_per_socket").get<int>();
    m.domains_per_node = j.at("domains_per_node").get<int>();
    m.saturating_cores = j.at("saturating_cores").get<int>();
    m.cache_l1 = j.at("cache_l1").get<std::int64_t>();
    m.cache_l2 = j.at("cache_l2").get<std::int64_t>();
    m.cache_l3 = j.at("cache_l3").get<std::int64_t>();
    m.line_size = j.value("line_size", std::int64_t{64});
    m.clock_hz = j.at("clock_hz").get<double>();
    m.speci2m_factor = j.at("speci2m_factor").get<double>();
    m.nt_factor = j.at("nt_factor").get<double>();
    m.speci2m_activation_cores = j.at("speci2m_activation_cores").get<int>();
    m.notes = j.value("notes", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(origin + ": schema error: " + e.what());
  }
  if (auto errs = validate_machine(m); !errs.empty()) throw InputError(origin + ": " + errs.front());
  return m;
}

inline MachineModel load_machine(const std::string& path) { return parse_machine(read_file(path), path); }

// ---------------------------------------------------------------------------
// Measurement CSV
// ---------------------------------------------------------------------------

struct MeasurementRecord {
  std::string kernel;
  int ranks = 1;
  double read_gbytes = 0;
  double write_gbytes = 0;
  std::int64_t call_count = 1;
  std::int64_t timesteps = 1;
  std::int64_t grid_points = 1;

  /// Measured bytes per iteration.
  [[nodiscard]] double balance() const {
    return (read_gbytes + write_gbytes) * 1e9 /
           (static_cast<double>(call_count) * static_cast<double>(timesteps) * static_cast<double>(grid_points));
  }
};

inline const std::vector<std::string>& measurement_columns() {
  static const std::vector<std::string> cols{"kernel",     "ranks",     "read_gbytes", "write_gbytes",
                                             "call_count", "timesteps", "grid_points"};
  return cols;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    while (!cur.empty() && (cur.back() == ' ' || cur.back() == '\r')) cur.pop_back();
    while (!cur.empty() && cur.front() == ' ') cur.erase(cur.begin());
    out.push_back(cur);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::vector<MeasurementRecord> parse_measurements(const std::string& text,
                                                         const std::string& origin = "<measurements>") {
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) { return InputError(origin + ":" + std::to_string(lineno) + ": " + msg); };

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \r\t") == std::string::npos || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.empty()) throw fail("missing header");

  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (std::find(measurement_columns().begin(), measurement_columns().end(), header[i]) == measurement_columns().end())
      throw fail("unexpected column '" + header[i] + "'");
    pos[header[i]] = i;
  }
  for (const auto& c : measurement_columns())
    if (!pos.count(c)) throw fail("missing column '" + c + "'");

  std::vector<MeasurementRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \r\t") == std::string::npos || line[0] == '#') continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw fail("expected " + std::to_string(header.size()) + " fields");
    auto field = [&](const char* c) -> const std::string& { return f[pos.at(c)]; };
    MeasurementRecord r;
    try {
      std::size_t used = 0;
      auto num = [&](const char* c) {
        const double v = std::stod(field(c), &used);
        if (used != field(c).size() || !std::isfinite(v)) throw std::invalid_argument(c);
        return v;
      };
      auto count = [&](const char* c) {
        const long long v = std::stoll(field(c), &used);
        if (used != field(c).size()) throw std::invalid_argument(c);
        return static_cast<std::int64_t>(v);
      };
      r.kernel = field("kernel");
      r.ranks = static_cast<int>(count("ranks"));
      r.read_gbytes = num("read_gbytes");
      r.write_gbytes = num("write_gbytes");
      r.call_count = count("call_count");
      r.timesteps = count("timesteps");
      r.grid_points = count("grid_points");
    } catch (const std::exception&) {
      throw fail("malformed number in row");
    }
    if (r.kernel.empty()) throw fail("empty kernel name");
    if (r.ranks < 1 || r.call_count < 1 || r.timesteps < 1 || r.grid_points < 1)
      throw fail("ranks, call_count, timesteps and grid_points must be positive");
    if (r.read_gbytes < 0 || r.write_gbytes < 0) throw fail("data volumes must be non-negative");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<MeasurementRecord> load_measurements(const std::string& path) {
  return parse_measurements(read_file(path), path);
}

inline void write_measurements(std::ostream& os, const std::vector<MeasurementRecord>& rows) {
  const auto& cols = measurement_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.kernel << "," << r.ranks << "," << r.read_gbytes << "," << r.write_gbytes << "," << r.call_count << ","
       << r.timesteps << "," << r.grid_points << "\n";
}

}  // namespace stencilwa

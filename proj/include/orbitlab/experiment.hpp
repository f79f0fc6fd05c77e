#pragma once

// Orbit-counting experiments: one streaming pass of the lattice enumerator
// at the largest T, each element bucketed into every grid cell it belongs to
// and every (region, basepoint) pair via the boundary action.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbitlab/boundary.hpp"
#include "orbitlab/error.hpp"
#include "orbitlab/haar.hpp"
#include "orbitlab/keyvalue.hpp"
#include "orbitlab/lattice.hpp"

namespace orbitlab {

inline constexpr const char* kVersion = "0.3.0";

/// Region id of the whole space; its row carries N_T(X, x0).
inline constexpr const char* kWholeSpaceId = "X";

struct Basepoint {
  std::string id;
  BoundaryPoint point;
};

struct ExperimentConfig {
  int n = 2;
  SubgroupSpec subgroup;
  std::vector<double> t_grid;
  std::vector<Basepoint> basepoints;
  std::vector<NamedRegion> regions;
  std::uint64_t seed = 1;
  int threads = 1;
  std::uint64_t max_elements = 100'000'000;
  std::string format = "csv";
  std::string out;
  std::string region_file;

  bool circle() const { return n == 2; }

  /// Throws ConfigError on any violated invariant.
  void validate() const {
    if (n < 2 || n > 4) throw ConfigError("n must be 2, 3 or 4");
    if (t_grid.empty()) throw ConfigError("T grid is empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      if (!(t_grid[i] > 0.0)) throw ConfigError("T grid values must be positive");
      if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw ConfigError("T grid must be strictly ascending");
    }
    if (regions.empty()) throw ConfigError("at least one region is required");
    if (basepoints.empty()) throw ConfigError("at least one basepoint is required");
    for (const auto& r : regions) {
      if (r.name == kWholeSpaceId) throw ConfigError("region name 'X' is reserved for the whole space");
      const bool is_circle = std::holds_alternative<CircleArcs>(r.region);
      if (is_circle != circle()) throw ConfigError("region '" + r.name + "' does not live on this boundary space");
      if (!is_circle && std::get<Caps>(r.region).n != n) throw ConfigError("cap region dimension differs from n");
      try {
        orbitlab::validate(r.region);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("region '" + r.name + "': " + e.what());
      }
    }
    for (const auto& b : basepoints) {
      const bool is_circle = std::holds_alternative<CirclePoint>(b.point);
      if (is_circle != circle()) throw ConfigError("basepoint '" + b.id + "' does not live on this boundary space");
      if (!is_circle && std::get<ProjectivePoint>(b.point).dim() != n) throw ConfigError("basepoint dimension differs");
    }
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }

  /// Canonical text of the resolved configuration (logged and hashed).
  std::string resolved() const {
    std::ostringstream os;
    os.precision(17);
    os << "[experiment]\n";
    os << "n = " << n << "\n";
    os << "subgroup = " << (subgroup.kind == SubgroupSpec::Kind::full ? 0 : subgroup.modulus) << "\n";
    os << "T_grid =";
    for (double t : t_grid) os << ' ' << t;
    os << "\nbasepoints =";
    for (const auto& b : basepoints) os << ' ' << b.id;
    os << "\nseed = " << seed << "\nthreads = " << threads << "\nmax_elements = " << max_elements;
    os << "\nformat = " << format << "\nout = " << out << "\nregion_file = " << region_file << "\n";
    for (const auto& r : regions) {
      os << "[region]\nname = " << r.name << "\n";
      if (const auto* arcs = std::get_if<CircleArcs>(&r.region)) {
        if (arcs->whole) os << "kind = whole\n";
        else {
          os << "kind = arcs\n";
          for (const Arc& a : arcs->arcs) os << "arc = " << a.lo << ' ' << a.hi << "\n";
        }
      } else {
        const Caps& caps = std::get<Caps>(r.region);
        os << "kind = caps\ndim = " << caps.n << "\n";
        for (const Cap& c : caps.caps) {
          os << "cap = " << c.angle;
          for (int i = 0; i < caps.n; ++i) os << ' ' << c.axis[i];
          os << "\n";
        }
      }
    }
    return os.str();
  }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline BoundaryPoint parse_basepoint(int n, const std::string& text) {
  if (n == 2) return parse_circle_point(text);
  return parse_projective_point(text);
}

/// Applies an [experiment] stanza on top of `config`.
inline void apply_experiment_stanza(const Stanza& st, ExperimentConfig& config) {
  for (const auto& [key, value] : st.entries) {
    if (key == "n") config.n = static_cast<int>(parse_int(value));
    else if (key == "subgroup") {
      const long long q = parse_int(value);
      config.subgroup = q <= 1 ? SubgroupSpec::full() : SubgroupSpec::congruence(q);
    } else if (key == "T_grid") config.t_grid = parse_double_list(value);
    else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_int(value));
    else if (key == "threads") config.threads = static_cast<int>(parse_int(value));
    else if (key == "max_elements") config.max_elements = static_cast<std::uint64_t>(parse_double(value));
    else if (key == "format") config.format = value;
    else if (key == "out") config.out = value;
    else if (key == "region_file") config.region_file = value;
    else if (key == "basepoint") {
      // basepoints are resolved once n is known; stash the text
      config.basepoints.push_back({value, CirclePoint::infinity()});
    } else {
      throw ConfigError("unknown experiment key '" + key + "' at line " + std::to_string(st.line));
    }
  }
}

/// Re-parses basepoint ids against the configured dimension.
inline void resolve_basepoints(ExperimentConfig& config) {
  for (auto& b : config.basepoints) b.point = parse_basepoint(config.n, b.id);
}

// ---------------------------------------------------------------------------
// count table
// ---------------------------------------------------------------------------

struct CountRow {
  double T = 0.0;
  std::string region;
  std::string basepoint;
  std::uint64_t count = 0;
  std::uint64_t boundary_hits = 0;
  double ratio = 0.0;
  double m_omega = 0.0;
  double deviation = 0.0;
  double covolume_est = 0.0;

  friend bool operator==(const CountRow&, const CountRow&) = default;
};

struct CountTable {
  int n = 2;
  std::vector<CountRow> rows;

  friend bool operator==(const CountTable&, const CountTable&) = default;

  /// Row for (T, region, basepoint), or nullptr.
  const CountRow* find(double T, const std::string& region, const std::string& basepoint) const {
    for (const auto& r : rows)
      if (r.T == T && r.region == region && r.basepoint == basepoint) return &r;
    return nullptr;
  }
};

namespace detail {

/// Per-worker tallies indexed by the first grid cell an element enters.
struct CountShard {
  const std::vector<std::int64_t>* thresholds;
  const std::vector<BoundaryPoint>* basepoints;
  const std::vector<Region>* regions;
  std::size_t cells, nb, nr;
  std::vector<std::uint64_t> total;     // [cell]
  std::vector<std::uint64_t> inside;    // [cell][basepoint][region]
  std::vector<std::uint64_t> boundary;  // [cell][basepoint][region]

  CountShard(const std::vector<std::int64_t>& th, const std::vector<BoundaryPoint>& bp, const std::vector<Region>& rg)
      : thresholds(&th), basepoints(&bp), regions(&rg), cells(th.size()), nb(bp.size()), nr(rg.size()),
        total(cells, 0), inside(cells * nb * nr, 0), boundary(cells * nb * nr, 0) {}

  void operator()(const LatticeElement& g) {
    const auto it = std::lower_bound(thresholds->begin(), thresholds->end(), g.norm_sq());
    const std::size_t cell = static_cast<std::size_t>(it - thresholds->begin());
    if (cell >= cells) return;
    ++total[cell];
    for (std::size_t b = 0; b < nb; ++b) {
      const BoundaryPoint image = act(g.matrix(), (*basepoints)[b]);
      for (std::size_t r = 0; r < nr; ++r) {
        const Membership m = classify((*regions)[r], image);
        const std::size_t idx = (cell * nb + b) * nr + r;
        if (m == Membership::inside) ++inside[idx];
        else if (m == Membership::boundary) ++boundary[idx];
      }
    }
  }

  void merge(const CountShard& o) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += o.total[i];
    for (std::size_t i = 0; i < inside.size(); ++i) inside[i] += o.inside[i];
    for (std::size_t i = 0; i < boundary.size(); ++i) boundary[i] += o.boundary[i];
  }
};

inline void fill_derived(CountRow& row, std::uint64_t whole, double m_omega, int n) {
  row.m_omega = m_omega;
  row.ratio = whole ? static_cast<double>(row.count) / static_cast<double>(whole) : 0.0;
  row.deviation = std::abs(row.ratio - row.m_omega);
  const double log_growth = (n * n - n) * std::log(row.T);
  row.covolume_est = whole ? std::exp(std::log(gamma_n(n)) + log_growth) / static_cast<double>(whole)
                           : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Runs the counting experiment. Region measures for caps outside n = 3 are
/// Monte Carlo estimates seeded from config.seed.
inline CountTable run_count(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::int64_t> thresholds;
  for (double T : config.t_grid) thresholds.push_back(strict_norm_threshold(T));
  std::vector<BoundaryPoint> points;
  for (const auto& b : config.basepoints) points.push_back(b.point);
  std::vector<Region> regions;
  std::vector<double> masses;
  CapMeasureOptions mopt;
  mopt.seed = config.seed;
  for (const auto& r : config.regions) {
    regions.push_back(r.region);
    masses.push_back(measure(r.region, mopt).value);
  }

  EnumerationOptions eopt;
  eopt.max_elements = config.max_elements;
  detail::CountShard merged(thresholds, points, regions);
  if (config.threads == 1) {
    enumerate_lattice(config.n, config.t_grid.back(), config.subgroup, merged, eopt);
  } else {
    auto shards = enumerate_lattice_parallel(
        config.n, config.t_grid.back(), config.subgroup, config.threads,
        [&] { return detail::CountShard(thresholds, points, regions); }, eopt);
    for (const auto& s : shards) merged.merge(s);
  }

  CountTable table;
  table.n = config.n;
  const std::size_t nb = points.size(), nr = regions.size();
  std::uint64_t whole = 0;
  std::vector<std::uint64_t> in(nb * nr, 0), hit(nb * nr, 0);
  for (std::size_t cell = 0; cell < thresholds.size(); ++cell) {
    whole += merged.total[cell];
    for (std::size_t i = 0; i < nb * nr; ++i) {
      in[i] += merged.inside[cell * nb * nr + i];
      hit[i] += merged.boundary[cell * nb * nr + i];
    }
    const double T = config.t_grid[cell];
    for (std::size_t b = 0; b < nb; ++b) {
      CountRow all{T, kWholeSpaceId, config.basepoints[b].id, whole, 0};
      detail::fill_derived(all, whole, 1.0, config.n);
      table.rows.push_back(all);
      for (std::size_t r = 0; r < nr; ++r) {
        CountRow row{T, config.regions[r].name, config.basepoints[b].id, in[b * nr + r], hit[b * nr + r]};
        detail::fill_derived(row, whole, masses[r], config.n);
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

/// Counts for `region` at `basepoint` are nondecreasing in T.
inline bool counts_monotone(const CountTable& table) {
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = i + 1; j < table.rows.size(); ++j) {
      const auto& a = table.rows[i];
      const auto& b = table.rows[j];
      if (a.region == b.region && a.basepoint == b.basepoint && a.T < b.T && a.count > b.count) return false;
    }
  return true;
}

/// For regions whose closures cover X and whose interiors are disjoint arcs,
/// each orbit point on a cut point lies on the boundary of exactly two arcs:
///   sum count + (1/2) sum boundary_hits = N_T(X).
/// Returns lhs - N_T(X) (zero when the identity holds).
inline double arc_partition_residual(const CountTable& table, double T, const std::string& basepoint,
                                     const std::vector<std::string>& region_ids) {
  const CountRow* all = table.find(T, kWholeSpaceId, basepoint);
  if (!all) throw std::invalid_argument("no whole-space row for this T and basepoint");
  double lhs = 0.0;
  for (const auto& id : region_ids) {
    const CountRow* row = table.find(T, id, basepoint);
    if (!row) throw std::invalid_argument("no row for region " + id);
    lhs += static_cast<double>(row->count) + 0.5 * static_cast<double>(row->boundary_hits);
  }
  return lhs - static_cast<double>(all->count);
}

struct ExponentFit {
  double slope = 0.0;
  double r2 = 0.0;
};

/// Least-squares slope of log N_T(X) against log T, from the whole-space
/// rows of the first basepoint.
inline ExponentFit fit_exponent(const CountTable& table) {
  std::vector<std::pair<double, double>> pts;
  std::string first;
  for (const auto& r : table.rows) {
    if (r.region != kWholeSpaceId) continue;
    if (first.empty()) first = r.basepoint;
    if (r.basepoint != first || r.count == 0) continue;
    pts.emplace_back(std::log(r.T), std::log(static_cast<double>(r.count)));
  }
  if (pts.size() < 3) throw std::invalid_argument("fit_exponent: need at least 3 grid points with nonzero counts");
  double mx = 0, my = 0;
  for (auto [x, y] : pts) mx += x, my += y;
  mx /= pts.size(), my /= pts.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_exponent: degenerate grid");
  const double slope = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {slope, r2};
}

struct CovolumeEstimate {
  double T;
  std::string basepoint;
  double value;  ///< gamma_n T^{n^2-n} / N_T(X, x0)
};

inline std::vector<CovolumeEstimate> estimate_covolume(const CountTable& table) {
  std::vector<CovolumeEstimate> out;
  for (const auto& r : table.rows) {
    if (r.region != kWholeSpaceId) continue;
    if (r.count == 0) throw std::invalid_argument("estimate_covolume: zero count at T = " + std::to_string(r.T));
    const double log_growth = (table.n * table.n - table.n) * std::log(r.T);
    out.push_back({r.T, r.basepoint, std::exp(std::log(gamma_n(table.n)) + log_growth) / static_cast<double>(r.count)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "T,region,basepoint,count,boundary_hits,ratio,m_omega,deviation,covolume_est";

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Quotes a field when it holds a comma, quote or newline (RFC 4180).
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

/// Splits one CSV line, honouring quoted fields.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ConfigError("unterminated quoted CSV field");
  out.push_back(cur);
  return out;
}

inline void write_csv(const CountTable& table, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : table.rows) {
    os << format_double(r.T) << ',' << csv_field(r.region) << ',' << csv_field(r.basepoint) << ',' << r.count << ',' << r.boundary_hits << ','
       << format_double(r.ratio) << ',' << format_double(r.m_omega) << ',' << format_double(r.deviation) << ','
       << format_double(r.covolume_est) << '\n';
  }
}

/// Parses a CSV written by write_csv. The dimension is not part of the CSV
/// and is taken from the argument.
inline CountTable read_csv(std::istream& in, int n = 2) {
  CountTable table;
  table.n = n;
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw ConfigError("CSV header mismatch");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 9) throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 9 fields");
    CountRow r;
    r.T = parse_double(f[0]);
    r.region = f[1];
    r.basepoint = f[2];
    r.count = static_cast<std::uint64_t>(parse_int(f[3]));
    r.boundary_hits = static_cast<std::uint64_t>(parse_int(f[4]));
    r.ratio = parse_double(f[5]);
    r.m_omega = parse_double(f[6]);
    r.deviation = parse_double(f[7]);
    r.covolume_est = parse_double(f[8]);
    table.rows.push_back(r);
  }
  return table;
}

struct RunMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string config_text;
};

inline RunMetadata make_metadata(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.resolved())));
  return {buf, config.seed, config.resolved()};
}

inline nlohmann::json to_json(const CountTable& table, const RunMetadata& meta) {
  using nlohmann::json;
  json j;
  j["metadata"] = {{"config_hash", meta.config_hash},
                   {"seed", meta.seed},
                   {"n", table.n},
                   {"versions", {{"orbitlab", kVersion}, {"compiler", __VERSION__}}}};
  json rows = json::array();
  // inf/nan are not JSON numbers; they are carried as strings
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(format_double(v)); };
  for (const auto& r : table.rows) {
    rows.push_back({{"T", num(r.T)},
                    {"region", r.region},
                    {"basepoint", r.basepoint},
                    {"count", r.count},
                    {"boundary_hits", r.boundary_hits},
                    {"ratio", num(r.ratio)},
                    {"m_omega", num(r.m_omega)},
                    {"deviation", num(r.deviation)},
                    {"covolume_est", num(r.covolume_est)}});
  }
  j["rows"] = rows;
  return j;
}

inline void write_json(const CountTable& table, const RunMetadata& meta, std::ostream& os) {
  os << to_json(table, meta).dump(2) << '\n';
}

}  // namespace orbitlab

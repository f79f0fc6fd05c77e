// orbitlab command line: enumerate, count, volume, measure, ergodic, report.
//
// Exit codes: 0 success, 2 configuration error, 3 enumeration budget
// exceeded, 1 anything else.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orbitlab/boundary.hpp"
#include "orbitlab/ergodic.hpp"
#include "orbitlab/experiment.hpp"
#include "orbitlab/haar.hpp"
#include "orbitlab/keyvalue.hpp"
#include "orbitlab/lattice.hpp"

namespace {

using namespace orbitlab;

/// Output sink: a file when a path is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<NamedRegion> load_regions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open region file " + path);
  auto regions = parse_region_file(in);
  if (regions.empty()) throw ConfigError("region file " + path + " has no [region] stanzas");
  return regions;
}

SubgroupSpec subgroup_from(long long q) { return q <= 1 ? SubgroupSpec::full() : SubgroupSpec::congruence(q); }

std::vector<double> parse_grid(const std::string& text) {
  auto grid = parse_double_list(text);
  if (grid.empty()) throw ConfigError("empty T grid");
  return grid;
}

struct CountFlags {
  std::string config_file;
  std::optional<int> n;
  std::string t_grid;
  std::optional<long long> subgroup;
  std::string region_file;
  std::vector<std::string> basepoints;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string format;
  std::string out;
  std::optional<double> max_elements;
};

ExperimentConfig resolve_count_config(const CountFlags& f) {
  ExperimentConfig config;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw ConfigError("cannot open config file " + f.config_file);
    for (const Stanza& st : parse_stanzas(in)) {
      if (st.section == "experiment") apply_experiment_stanza(st, config);
    }
  }
  if (f.n) config.n = *f.n;
  if (!f.t_grid.empty()) config.t_grid = parse_grid(f.t_grid);
  if (f.subgroup) config.subgroup = subgroup_from(*f.subgroup);
  if (!f.region_file.empty()) config.region_file = f.region_file;
  if (!f.basepoints.empty()) {
    config.basepoints.clear();
    for (const auto& b : f.basepoints) config.basepoints.push_back({b, CirclePoint::infinity()});
  }
  if (f.seed) config.seed = *f.seed;
  if (f.threads) config.threads = *f.threads;
  if (!f.format.empty()) config.format = f.format;
  if (!f.out.empty()) config.out = f.out;
  if (f.max_elements) config.max_elements = static_cast<std::uint64_t>(*f.max_elements);

  if (config.basepoints.empty()) {
    // oo on the circle, e1 on projective space
    std::string id = config.n == 2 ? "inf" : "1";
    for (int i = 1; i < config.n && config.n != 2; ++i) id += ",0";
    config.basepoints.push_back({id, CirclePoint::infinity()});
  }
  if (config.n < 2 || config.n > 4) throw ConfigError("n must be 2, 3 or 4");
  resolve_basepoints(config);
  if (!config.region_file.empty()) {
    config.regions = load_regions(config.region_file);
  } else if (config.n == 2) {
    config.regions.push_back({"R0", CircleArcs{{{-1.0, 1.0}}, false}});
  }
  config.validate();
  return config;
}

int run(int argc, char** argv) {
  CLI::App app{"orbitlab: lattice orbit counting and Borel ergodic averages on SL(n,R)"};
  app.require_subcommand(1);

  // enumerate
  auto* enumerate = app.add_subcommand("enumerate", "dump { g in Gamma : ||g|| < T }, one element per line");
  int e_n = 2;
  double e_T = 2.0;
  long long e_q = 0;
  std::string e_out;
  double e_max = 1e8;
  enumerate->add_option("--n", e_n, "dimension (2, 3 or 4)");
  enumerate->add_option("--T", e_T, "strict norm bound")->required();
  enumerate->add_option("--subgroup", e_q, "principal congruence modulus q (0 or 1: full group)");
  enumerate->add_option("--out", e_out, "output path (default stdout)");
  enumerate->add_option("--max-elements", e_max, "element-count ceiling");

  // count
  auto* count = app.add_subcommand("count", "orbit counting experiment");
  CountFlags cf;
  count->add_option("--config", cf.config_file, "experiment config file ([experiment] stanza)");
  count->add_option("--n", cf.n, "dimension");
  count->add_option("--T-grid", cf.t_grid, "ascending T values, comma separated");
  count->add_option("--subgroup", cf.subgroup, "principal congruence modulus q");
  count->add_option("--region-file", cf.region_file, "region description file");
  count->add_option("--basepoint", cf.basepoints, "basepoint (inf, 0, 1/3 or x,y,z); repeatable");
  count->add_option("--seed", cf.seed, "seed (region Monte Carlo only)");
  count->add_option("--threads", cf.threads, "worker threads");
  count->add_option("--format", cf.format, "csv or json");
  count->add_option("--out", cf.out, "output path (default stdout)");
  count->add_option("--max-elements", cf.max_elements, "element-count ceiling");

  // volume
  auto* volume = app.add_subcommand("volume", "right Haar volumes of norm balls in B°");
  int v_n = 2;
  std::string v_grid = "1000";
  std::string v_cones = "-inf";
  std::string v_out;
  volume->add_option("--n", v_n, "dimension (2, 3 or 4)");
  volume->add_option("--T-grid", v_grid, "T values");
  volume->add_option("--C", v_cones, "cone parameters (-inf for the full ball)");
  volume->add_option("--out", v_out, "output path");

  // measure
  auto* measure_cmd = app.add_subcommand("measure", "invariant measure of regions");
  std::string m_regions;
  std::uint64_t m_seed = 1;
  bool m_mc = false;
  double m_target = 1e-3;
  std::string m_out;
  measure_cmd->add_option("--region-file", m_regions, "region description file")->required();
  measure_cmd->add_option("--seed", m_seed, "Monte Carlo seed");
  measure_cmd->add_flag("--monte-carlo", m_mc, "force Monte Carlo for caps");
  measure_cmd->add_option("--target-error", m_target, "3-sigma target for Monte Carlo");
  measure_cmd->add_option("--out", m_out, "output path");

  // ergodic
  auto* ergodic = app.add_subcommand("ergodic", "Borel-ball ergodic averages on SL(2,Z)\\SL(2,R)");
  std::string g_grid = "10,100,1000";
  std::uint64_t g_samples = 1'000'000;
  std::uint64_t g_seed = 1;
  std::string g_box = "-0.5,0.5,1,2";
  std::string g_chirality = "right";
  std::string g_basepoint = "identity";
  int g_threads = 1;
  std::string g_out;
  ergodic->add_option("--T-grid", g_grid, "T values");
  ergodic->add_option("--samples", g_samples, "Monte Carlo samples per T");
  ergodic->add_option("--seed", g_seed, "seed");
  ergodic->add_option("--box", g_box, "indicator box re_min,re_max,im_min,im_max");
  ergodic->add_option("--chirality", g_chirality, "right or left Haar measure");
  ergodic->add_option("--basepoint", g_basepoint, "identity or a,b,c,d (row-major, det 1)");
  ergodic->add_option("--threads", g_threads, "worker threads");
  ergodic->add_option("--out", g_out, "output path");

  // report
  auto* report = app.add_subcommand("report", "re-render a stored count table");
  std::string r_in, r_format = "csv", r_out;
  int r_n = 2;
  report->add_option("--in", r_in, "CSV produced by count")->required();
  report->add_option("--format", r_format, "csv or json");
  report->add_option("--n", r_n, "dimension of the stored run");
  report->add_option("--out", r_out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*enumerate) {
    Output out(e_out);
    EnumerationOptions opt;
    opt.max_elements = static_cast<std::uint64_t>(e_max);
    std::ostream& os = out.stream();
    enumerate_lattice(e_n, e_T, subgroup_from(e_q), [&](const LatticeElement& g) { write_raw(os, g.matrix()); }, opt);
    return 0;
  }

  if (*count) {
    const ExperimentConfig config = resolve_count_config(cf);
    std::cerr << "# resolved configuration\n" << config.resolved();
    const CountTable table = run_count(config);
    Output out(config.out);
    if (config.format == "json") {
      write_json(table, make_metadata(config), out.stream());
    } else {
      write_csv(table, out.stream());
    }
    try {
      const ExponentFit fit = fit_exponent(table);
      std::cerr << "# exponent fit: slope " << fit.slope << " (expected " << config.n * (config.n - 1)
                << "), r^2 " << fit.r2 << "\n";
    } catch (const std::invalid_argument&) {
      // fewer than three usable grid points
    }
    return 0;
  }

  if (*volume) {
    Output out(v_out);
    std::ostream& os = out.stream();
    os << "n,T,C,value,error\n";
    for (double T : parse_grid(v_grid)) {
      for (double C : parse_double_list(v_cones)) {
        VolumeResult r;
        try {
          r = rho_ball_volume(v_n, T, C);
        } catch (const QuadratureError& e) {
          std::cerr << "warning: " << e.what() << " (n=" << v_n << ", T=" << T << ", C=" << C << ")\n";
          r.value = e.partial_value();
          r.quadrature_error = e.partial_error();
        }
        os << v_n << ',' << format_double(T) << ',' << format_double(C) << ',' << format_double(r.value) << ','
           << format_double(r.quadrature_error) << '\n';
      }
    }
    return 0;
  }

  if (*measure_cmd) {
    Output out(m_out);
    std::ostream& os = out.stream();
    CapMeasureOptions opt;
    opt.seed = m_seed;
    opt.force_monte_carlo = m_mc;
    opt.target_error = m_target;
    os << "region,measure,error_bound\n";
    for (const auto& r : load_regions(m_regions)) {
      const MeasureValue v = measure(r.region, opt);
      os << r.name << ',' << format_double(v.value) << ',' << format_double(v.error_bound) << '\n';
    }
    return 0;
  }

  if (*ergodic) {
    const auto box = parse_double_list(g_box);
    if (box.size() != 4) throw ConfigError("--box needs re_min,re_max,im_min,im_max");
    TestFunction f;
    try {
      f = TestFunction::indicator_box(box[0], box[1], box[2], box[3]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--box: ") + e.what());
    }
    RealMatrix rep = RealMatrix::identity(2);
    if (g_basepoint != "identity") {
      const auto v = parse_double_list(g_basepoint);
      if (v.size() != 4) throw ConfigError("--basepoint needs four entries");
      rep = RealMatrix{v[0], v[1], v[2], v[3]};
    }
    std::optional<CosetPoint> y;
    try {
      y.emplace(GroupElement(rep));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--basepoint: ") + e.what());
    }
    if (g_chirality != "right" && g_chirality != "left") throw ConfigError("--chirality must be right or left");
    const MonteCarloResult nu = nu_integral(f, g_samples, g_seed ^ 0x9e3779b97f4a7c15ull, g_threads);
    Output out(g_out);
    std::ostream& os = out.stream();
    os << "T,estimate,std_error,nu_value\n";
    for (double T : parse_grid(g_grid)) {
      const MonteCarloResult r = g_chirality == "right" ? ergodic_average(*y, f, T, g_samples, g_seed, g_threads)
                                                        : left_haar_average(*y, f, T, g_samples, g_seed, g_threads);
      os << format_double(T) << ',' << format_double(r.estimate) << ',' << format_double(r.std_error) << ','
         << format_double(nu.estimate) << '\n';
    }
    return 0;
  }

  if (*report) {
    std::ifstream in(r_in);
    if (!in) throw ConfigError("cannot open " + r_in);
    const CountTable table = read_csv(in, r_n);
    Output out(r_out);
    if (r_format == "json") {
      RunMetadata meta;
      meta.config_hash = "unknown";
      write_json(table, meta, out.stream());
    } else if (r_format == "csv") {
      write_csv(table, out.stream());
    } else {
      throw ConfigError("--format must be csv or json");
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const orbitlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const orbitlab::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

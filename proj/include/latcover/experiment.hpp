#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "latcover/clustering.hpp"
#include "latcover/domain.hpp"
#include "latcover/gff.hpp"
#include "latcover/harmonic.hpp"
#include "latcover/isomorphism.hpp"
#include "latcover/parallel.hpp"
#include "latcover/stats.hpp"
#include "latcover/walk.hpp"

namespace latcover {

inline constexpr const char* kVersion = "0.1.0";

enum class ExitCode : int {
  Ok = 0,
  Failure = 1,
  UnknownCommand = 2,
  InvalidShape = 3,
  OutOfRange = 4,
  Io = 5,
};

/// Aggregated validation failure.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& es) {
    std::string s;
    for (const auto& e : es) s += (s.empty() ? "" : "; ") + e;
    return s;
  }
  std::vector<std::string> errors_;
};

class UnknownCommandError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds{"green-table", "iso-check", "cover-scaling", "cluster-census",
                                             "excursion-moments"};
  return cmds;
}

struct ExperimentConfig {
  std::string command;
  std::string shape = "disc";
  /// Log-scales n; --N values are converted to n = log N on validation.
  std::vector<double> n;
  std::vector<double> big_n;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 1;
  double u = 0.0;
  std::optional<double> t;
  double s = 0.0;
  double eta0 = kDefaultEta0;
  double gamma = kDefaultGamma;
  double rate = kDefaultEdgeRate;
  std::string out = "out";
  bool dump_fields = false;
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  j["shape"] = c.shape;
  j["n"] = c.n;
  j["N"] = c.big_n;
  j["trials"] = c.trials ? nlohmann::json(*c.trials) : nlohmann::json(nullptr);
  j["seed"] = c.seed;
  j["u"] = c.u;
  j["t"] = c.t ? nlohmann::json(*c.t) : nlohmann::json(nullptr);
  j["s"] = c.s;
  j["eta0"] = c.eta0;
  j["gamma"] = c.gamma;
  j["rate"] = c.rate;
  j["out"] = c.out;
  j["dump_fields"] = c.dump_fields;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.command = j.value("command", c.command);
  c.shape = j.value("shape", c.shape);
  c.n = j.value("n", c.n);
  c.big_n = j.value("N", c.big_n);
  if (j.contains("trials") && !j["trials"].is_null()) c.trials = j["trials"].get<std::size_t>();
  c.seed = j.value("seed", c.seed);
  c.u = j.value("u", c.u);
  if (j.contains("t") && !j["t"].is_null()) c.t = j["t"].get<double>();
  c.s = j.value("s", c.s);
  c.eta0 = j.value("eta0", c.eta0);
  c.gamma = j.value("gamma", c.gamma);
  c.rate = j.value("rate", c.rate);
  c.out = j.value("out", c.out);
  c.dump_fields = j.value("dump_fields", c.dump_fields);
  return c;
}

/// Fills command-specific defaults and checks every parameter. Throws
/// UnknownCommandError for an unrecognized command and ConfigError listing
/// all range violations otherwise.
inline ExperimentConfig validate(ExperimentConfig c) {
  const auto& cmds = known_commands();
  if (!c.command.empty() && std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
    throw UnknownCommandError("unknown command '" + c.command + "'");
  std::vector<std::string> errs;
  for (double bn : c.big_n) {
    if (!(bn > 1.0) || !std::isfinite(bn))
      errs.push_back("N must be > 1 (got " + std::to_string(bn) + ")");
    else
      c.n.push_back(std::log(bn));
  }
  c.big_n.clear();
  if (c.n.empty()) {
    if (c.command == "cover-scaling")
      c.n = {3.0, 3.5, 4.0, 4.5};
    else
      c.n = {3.0};
  }
  for (double n : c.n)
    if (!(n > 0.0) || !std::isfinite(n)) errs.push_back("n must be > 0 (got " + std::to_string(n) + ")");
  if (!c.trials) c.trials = c.command == "iso-check" ? 10000 : c.command == "excursion-moments" ? 100000 : 200;
  if (*c.trials < 1) errs.push_back("trials must be >= 1");
  if (c.command == "iso-check" && *c.trials < 1000) errs.push_back("iso-check needs trials >= 1000");
  if (c.command == "excursion-moments" && *c.trials < 2) errs.push_back("excursion-moments needs trials >= 2");
  if (!c.t && c.command != "cluster-census") c.t = 1.0;
  if (c.t && !(*c.t >= 0.0)) errs.push_back("t must be >= 0");
  if (!(c.u >= 0.0)) errs.push_back("u must be >= 0");
  if (!std::isfinite(c.s)) errs.push_back("s must be finite");
  if (!(c.eta0 > 0.0 && c.eta0 < 0.5)) errs.push_back("eta0 must lie in (0, 1/2)");
  if (!(c.gamma > 0.0 && c.gamma < 0.5 - c.eta0)) errs.push_back("gamma must lie in (0, 1/2 - eta0)");
  if (!(c.rate > 0.0) || !std::isfinite(c.rate)) errs.push_back("rate must be > 0");
  if (c.out.empty()) errs.push_back("output directory must be nonempty");
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return c;
}

// ---------------------------------------------------------------------------
// Output helpers

/// 17 significant digits: round-trips every double.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::ios_base::failure("cannot write " + path.string());
    row_strings(header);
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  static std::string cell(double x) { return fmt_double(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I i) {
    return std::to_string(i);
  }
  std::ofstream out_;
};

struct RunResult {
  std::vector<std::filesystem::path> outputs;
  nlohmann::json summary;
};

inline std::uint64_t scale_seed(std::uint64_t seed, std::size_t n_index) {
  return mix64(seed ^ mix64(0x5ca1eULL + n_index));
}

inline int nearest_vertex(const LatticeDomain& d, Vec2 target) {
  int best = 0;
  double bd = INFINITY;
  for (int v = 0; v < static_cast<int>(d.size()); ++v) {
    const Point p = d.site(v);
    const double dd = std::hypot(p.x - target.x, p.y - target.y);
    if (dd < bd) {
      bd = dd;
      best = v;
    }
  }
  return best;
}

inline std::string indexed(const std::string& stem, std::size_t i) { return stem + "_" + std::to_string(i) + ".csv"; }

// ---------------------------------------------------------------------------
// Commands

inline RunResult run_green_table(const ExperimentConfig& c, const PlanarShape& shape) {
  RunResult r;
  const std::filesystem::path dir(c.out);
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    const auto d = discretize(shape, c.n[i]);
    if (d.empty()) throw ConfigError({"domain at n=" + fmt_double(c.n[i]) + " is empty"});
    const auto g = green(d);
    {
      CsvWriter w(dir / indexed("vertices", i), {"vertex", "x", "y"});
      for (int v = 0; v < static_cast<int>(d.size()); ++v) w.row(v, d.site(v).x, d.site(v).y);
    }
    std::vector<std::string> header{"vertex"};
    for (int v = 0; v < g.size(); ++v) header.push_back(std::to_string(v));
    CsvWriter w(dir / indexed("green_table", i), header);
    for (int x = 0; x < g.size(); ++x) {
      std::vector<std::string> cells{std::to_string(x)};
      for (int y = 0; y < g.size(); ++y) cells.push_back(fmt_double(g(x, y)));
      w.row_strings(cells);
    }
    r.outputs.push_back(dir / indexed("vertices", i));
    r.outputs.push_back(dir / indexed("green_table", i));
    r.summary["domains"].push_back({{"n", c.n[i]}, {"vertices", d.size()}});
  }
  return r;
}

inline RunResult run_iso_check(const ExperimentConfig& c, const PlanarShape& shape) {
  RunResult r;
  const std::filesystem::path dir(c.out);
  const WalkConfig wc{c.rate, c.seed};
  CsvWriter w(dir / "iso_check.csv", {"n", "t", "probe", "x", "y", "samples", "ks_statistic", "ks_p_value",
                                      "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "exact_mean"});
  nlohmann::json report = nlohmann::json::array();
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    const auto d = discretize(shape, c.n[i]);
    if (d.empty()) throw ConfigError({"domain at n=" + fmt_double(c.n[i]) + " is empty"});
    const WiredGraph graph(d);
    const auto g = green(d);
    const CovarianceFactorization factor(g);
    std::vector<int> probes{nearest_vertex(d, {0, 0})};
    const int second = nearest_vertex(d, {std::exp(c.n[i]) / 2, 0});
    if (second != probes[0]) probes.push_back(second);
    const auto rep = check_iso_marginal(graph, g, factor, *c.t, probes, *c.trials, scale_seed(c.seed, i), wc);
    for (const auto& p : rep.probes) {
      w.row(c.n[i], rep.t, p.vertex, p.site.x, p.site.y, rep.samples, p.ks.statistic, p.ks.p_value, p.lhs_mean.mean,
            p.lhs_mean.se, p.rhs_mean.mean, p.rhs_mean.se, p.exact_mean);
      report.push_back({{"n", c.n[i]},
                        {"t", rep.t},
                        {"probe", p.vertex},
                        {"x", p.site.x},
                        {"y", p.site.y},
                        {"samples", rep.samples},
                        {"ks_statistic", p.ks.statistic},
                        {"ks_p_value", p.ks.p_value},
                        {"rejected_at_0.001", p.ks.rejected()},
                        {"lhs_mean", p.lhs_mean.mean},
                        {"lhs_se", p.lhs_mean.se},
                        {"rhs_mean", p.rhs_mean.mean},
                        {"rhs_se", p.rhs_mean.se},
                        {"exact_mean", p.exact_mean}});
    }
    if (c.dump_fields) {
      auto rng = CounterRng::stream(scale_seed(c.seed, i) ^ kFieldStream, 0);
      const auto h = factor.sample(rng);
      CsvWriter fw(dir / indexed("field", i), {"x", "y", "value"});
      for (int v = 0; v < graph.size(); ++v) fw.row(d.site(v).x, d.site(v).y, h[v]);
      r.outputs.push_back(dir / indexed("field", i));
    }
  }
  std::ofstream(dir / "iso_report.json") << report.dump(2) << '\n';
  r.outputs.push_back(dir / "iso_check.csv");
  r.outputs.push_back(dir / "iso_report.json");
  std::size_t rejections = 0;
  for (const auto& p : report) rejections += p["rejected_at_0.001"].get<bool>();
  r.summary = {{"probes", report.size()}, {"rejections_at_0.001", rejections}};
  return r;
}

/// Per-n summary row of the cover-time experiment.
struct CoverScalingRow {
  double n = 0;
  double big_n = 0;
  std::size_t sites = 0;
  int deg_boundary = 0;
  std::size_t trials = 0;
  double median_sqrt_cover = 0;
  double predicted_sqrt_cover = 0;
  double iqr_sqrt_cover = 0;
  double median_sqrt_real = 0;
  double predicted_sqrt_real = 0;

  double residual() const { return median_sqrt_cover - predicted_sqrt_cover; }
  double residual_real() const { return median_sqrt_real - predicted_sqrt_real; }
};

/// Cover trials at one scale. Boundary times are reported in edge-rate
/// 1/(2 pi) units and real times in edge-rate 1 units whatever `rate` is.
inline std::pair<CoverScalingRow, std::vector<CoverResult>> cover_scaling_at(const PlanarShape& shape, double n,
                                                                           std::size_t trials, std::uint64_t seed,
                                                                           double rate) {
  const auto d = discretize(shape, n);
  if (d.empty()) throw ConfigError({"domain at n=" + fmt_double(n) + " is empty"});
  const WiredGraph graph(d);
  const WalkConfig wc{rate, seed};
  std::vector<CoverResult> res(trials);
  parallel_for(trials, [&](std::size_t k) {
    auto rng = CounterRng::stream(seed, k);
    res[k] = run_to_cover(graph, wc, rng);
  });
  const double to_boundary_units = rate * 2 * kPi, to_real_units = rate;
  std::vector<double> sqrt_b(trials), sqrt_r(trials);
  const double dhat = static_cast<double>(d.size() + 1);
  for (std::size_t k = 0; k < trials; ++k) {
    sqrt_b[k] = std::sqrt(res[k].boundary_time * to_boundary_units);
    sqrt_r[k] = std::sqrt(res[k].real_time * to_real_units / dhat);
  }
  CoverScalingRow row;
  row.n = n;
  row.big_n = std::exp(n);
  row.sites = d.size();
  row.deg_boundary = graph.deg_boundary();
  row.trials = trials;
  row.median_sqrt_cover = stats::quantile(sqrt_b, 0.5);
  row.iqr_sqrt_cover = stats::quantile(sqrt_b, 0.75) - stats::quantile(sqrt_b, 0.25);
  row.predicted_sqrt_cover = phase_times(n).sqrt_t_c;
  row.median_sqrt_real = stats::quantile(sqrt_r, 0.5);
  const double logn = std::log(row.big_n);
  row.predicted_sqrt_real = (logn - 0.25 * std::log(logn)) / std::sqrt(kPi);
  return {row, std::move(res)};
}

inline RunResult run_cover_scaling(const ExperimentConfig& c, const PlanarShape& shape) {
  RunResult r;
  const std::filesystem::path dir(c.out);
  CsvWriter trials_csv(dir / "cover_trials.csv", {"trial", "N", "T_cover_real", "T_cover_boundary", "excursions"});
  CsvWriter summary(dir / "cover_scaling.csv",
                    {"n", "N", "sites", "deg_boundary", "trials", "median_sqrt_T_boundary", "predicted_sqrt_t_C",
                     "residual", "IQR", "median_sqrt_T_real_over_sites", "predicted_sqrt_real_t_C",
                     "residual_real"});
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    auto [row, res] = cover_scaling_at(shape, c.n[i], *c.trials, scale_seed(c.seed, i), c.rate);
    for (std::size_t k = 0; k < res.size(); ++k)
      trials_csv.row(k, row.big_n, res[k].real_time, res[k].boundary_time, res[k].excursions);
    summary.row(row.n, row.big_n, row.sites, row.deg_boundary, row.trials, row.median_sqrt_cover,
                row.predicted_sqrt_cover, row.residual(), row.iqr_sqrt_cover, row.median_sqrt_real,
                row.predicted_sqrt_real, row.residual_real());
    r.summary["rows"].push_back({{"n", row.n}, {"residual", row.residual()}, {"iqr", row.iqr_sqrt_cover}});
  }
  r.outputs = {dir / "cover_trials.csv", dir / "cover_scaling.csv"};
  return r;
}

inline RunResult run_cluster_census(const ExperimentConfig& c, const PlanarShape& shape) {
  RunResult r;
  const std::filesystem::path dir(c.out);
  const WalkConfig wc{c.rate, c.seed};
  int kmax = 0;
  for (double n : c.n) kmax = std::max(kmax, phase_times(n, c.eta0, c.gamma).cluster_scale());
  std::vector<std::string> header{"trial", "n", "u", "W", "centers"};
  for (int k = 0; k <= kmax; ++k) header.push_back("centers_k" + std::to_string(k));
  CsvWriter w(dir / "cluster_census.csv", header);
  CsvWriter trend(dir / "cluster_trend.csv",
                  {"n", "t_A", "r_n", "trials", "mean_W", "mean_centers", "fraction_W_in_small_clusters"});
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    const auto pt = phase_times(c.n[i], c.eta0, c.gamma);
    const auto d = discretize(shape, c.n[i]);
    if (d.empty()) throw ConfigError({"domain at n=" + fmt_double(c.n[i]) + " is empty"});
    const WiredGraph graph(d);
    const SiteSet bulk_sites = bulk(d);
    const std::size_t trials = *c.trials;
    std::vector<ClusterCensus> census(trials);
    std::vector<std::size_t> wsize(trials);
    const auto seed = scale_seed(c.seed, i);
    parallel_for(trials, [&](std::size_t k) {
      auto rng = CounterRng::stream(seed, k);
      const auto field = sample_local_time_field(graph, wc, pt.t_a, rng);
      const SiteSet ws = low_set(d, field, c.u, bulk_sites);
      wsize[k] = ws.size();
      census[k] = cluster_census(ws, pt);
    });
    double sum_w = 0, sum_c = 0, small = 0, total = 0;
    for (std::size_t k = 0; k < trials; ++k) {
      std::vector<std::string> cells{std::to_string(k), fmt_double(c.n[i]), fmt_double(c.u),
                                     std::to_string(wsize[k]), std::to_string(census[k].center_count())};
      for (int s = 0; s <= kmax; ++s) {
        auto it = census[k].centers_by_scale.find(s);
        cells.push_back(std::to_string(it == census[k].centers_by_scale.end() ? 0 : it->second.size()));
      }
      w.row_strings(cells);
      sum_w += static_cast<double>(wsize[k]);
      sum_c += static_cast<double>(census[k].center_count());
      SiteSet small_sites;
      for (int s = 0; s <= static_cast<int>(std::floor(pt.r_n)); ++s) {
        const auto v = census[k].vertices_at_scale(s);
        small_sites.insert(small_sites.end(), v.begin(), v.end());
      }
      small += static_cast<double>(canonical(small_sites).size());
      total += static_cast<double>(wsize[k]);
    }
    const double tr = static_cast<double>(trials);
    trend.row(c.n[i], pt.t_a, pt.r_n, trials, sum_w / tr, sum_c / tr, total > 0 ? small / total : 0.0);
  }
  r.outputs = {dir / "cluster_census.csv", dir / "cluster_trend.csv"};
  return r;
}

inline RunResult run_excursion_moments(const ExperimentConfig& c, const PlanarShape& shape) {
  RunResult r;
  const std::filesystem::path dir(c.out);
  const WalkConfig wc{c.rate, c.seed};
  CsvWriter w(dir / "excursion_moments.csv",
              {"n", "N", "sites", "deg_boundary", "excursions", "mean_theta", "se_theta", "predicted_mean_theta",
               "mean_theta2", "se_theta2", "t", "mean_inverse_boundary_time", "se_inverse_boundary_time",
               "predicted_inverse_boundary_time"});
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    const auto d = discretize(shape, c.n[i]);
    if (d.empty()) throw ConfigError({"domain at n=" + fmt_double(c.n[i]) + " is empty"});
    const WiredGraph graph(d);
    const std::size_t trials = *c.trials;
    const auto seed = scale_seed(c.seed, i);
    std::vector<double> theta(trials), theta2(trials), inv(trials);
    parallel_for(trials, [&](std::size_t k) {
      auto rng = CounterRng::stream(seed, k);
      std::vector<double> lt(static_cast<std::size_t>(graph.size()), 0.0);
      theta[k] = run_excursion(graph, c.rate, rng, lt).second;
      theta2[k] = theta[k] * theta[k];
      auto rf = CounterRng::stream(seed ^ kLocalTimeStream, k);
      inv[k] = sample_local_time_field(graph, wc, *c.t, rf).inverse_boundary_time(*c.t);
    });
    const auto m1 = stats::mean_ci(theta), m2 = stats::mean_ci(theta2), mi = stats::mean_ci(inv);
    // E theta = 2 pi |D| / deg(boundary) at edge rate 1/(2 pi); holding times scale as 1/rate
    const double predicted = static_cast<double>(d.size()) / (graph.deg_boundary() * c.rate);
    w.row(c.n[i], std::exp(c.n[i]), d.size(), graph.deg_boundary(), trials, m1.mean, m1.se, predicted, m2.mean,
          m2.se, *c.t, mi.mean, mi.se, *c.t * static_cast<double>(d.size() + 1));
    r.summary["rows"].push_back({{"n", c.n[i]}, {"mean_theta", m1.mean}, {"predicted", predicted}});
  }
  r.outputs = {dir / "excursion_moments.csv"};
  return r;
}

/// Executes a validated config, writing CSV data and a JSON manifest into
/// config.out. Data files are byte-identical for identical configs.
inline RunResult run(const ExperimentConfig& raw) {
  if (raw.command.empty()) throw UnknownCommandError("no command given");
  const ExperimentConfig c = validate(raw);
  const PlanarShape shape = parse_shape(c.shape);
  std::filesystem::create_directories(c.out);
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  if (c.command == "green-table")
    r = run_green_table(c, shape);
  else if (c.command == "iso-check")
    r = run_iso_check(c, shape);
  else if (c.command == "cover-scaling")
    r = run_cover_scaling(c, shape);
  else if (c.command == "cluster-census")
    r = run_cluster_census(c, shape);
  else
    r = run_excursion_moments(c, shape);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json manifest;
  manifest["config"] = to_json(c);
  manifest["version"] = kVersion;
  manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION);
  manifest["wall_time_seconds"] = wall;
  manifest["threads"] = worker_threads();
  for (const auto& p : r.outputs) manifest["outputs"].push_back(p.filename().string());
  manifest["summary"] = r.summary;
  const auto mpath = std::filesystem::path(c.out) / (c.command + "_manifest.json");
  std::ofstream(mpath) << manifest.dump(2) << '\n';
  r.outputs.push_back(mpath);
  return r;
}

}  // namespace latcover

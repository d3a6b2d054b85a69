// Command-line driver for the cover-time experiments.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latcover/experiment.hpp"

namespace {

int code(latcover::ExitCode c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
  using namespace latcover;
  CLI::App app{"Cover times and local-time clusters on planar lattice domains"};
  app.set_version_flag("--version", kVersion);

  ExperimentConfig cfg;
  std::string config_path;
  std::size_t trials = 0;
  double t = -1;
  app.add_option("command", cfg.command, "green-table | iso-check | cover-scaling | cluster-census | excursion-moments");
  app.add_option("--config", config_path, "re-run from a manifest written by an earlier run");
  app.add_option("--shape", cfg.shape, "disc | square | poly:<path>");
  app.add_option("--n", cfg.n, "log-scales, comma separated")->delimiter(',');
  app.add_option("--N", cfg.big_n, "scales, comma separated")->delimiter(',');
  auto* trials_opt = app.add_option("--trials", trials, "trials or samples per scale");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--u", cfg.u, "level for low sets");
  auto* t_opt = app.add_option("--t", t, "boundary local time (cluster-census always uses t_A)");
  app.add_option("--s", cfg.s, "time shift");
  app.add_option("--eta0", cfg.eta0, "mesoscopic exponent");
  app.add_option("--gamma", cfg.gamma, "downcrossing window exponent");
  app.add_option("--rate", cfg.rate, "edge rate");
  app.add_option("--out", cfg.out, "output directory");
  app.add_flag("--dump-fields", cfg.dump_fields, "write sampled fields as x,y,value CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::OutOfRange);
  }

  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error: cannot read " << config_path << '\n';
        return code(ExitCode::Io);
      }
      const auto j = nlohmann::json::parse(in);
      const auto saved = config_from_json(j.contains("config") ? j["config"] : j);
      // explicit flags win over the saved config
      std::string out = cfg.out;
      cfg = saved;
      if (app.count("--out")) cfg.out = out;
    } else {
      if (*trials_opt) cfg.trials = trials;
      if (*t_opt) cfg.t = t;
    }
    const auto result = run(cfg);
    for (const auto& p : result.outputs) std::cout << p.string() << '\n';
    return code(ExitCode::Ok);
  } catch (const UnknownCommandError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return code(ExitCode::UnknownCommand);
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return code(ExitCode::InvalidShape);
  } catch (const ConfigError& e) {
    for (const auto& msg : e.errors()) std::cerr << "error: " << msg << '\n';
    return code(ExitCode::OutOfRange);
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::Io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::Failure);
  }
}

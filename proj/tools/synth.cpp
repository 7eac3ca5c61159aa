#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sls/config.hpp"
#include "sls/errors.hpp"
#include "sls/runner.hpp"

namespace {

std::vector<int> parse_n_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw sls::ValidationError("bad integer '" + tok + "' in --n");
    out.push_back(v);
  }
  if (out.empty()) throw sls::ValidationError("--n needs at least one value");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simple pole approximation and deadbeat SLS synthesis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run the design described by a config file");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "override the output directory");

  std::string n_list;
  bool flat = false;
  auto* sweep = app.add_subcommand("sweep", "convergence sweep over spiral fills");
  sweep->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--n", n_list, "comma-separated spiral parameters")->required();
  sweep->add_flag("--independent", flat, "use spiral(n) alone instead of nested unions");
  sweep->add_option("-o,--out", out_dir, "override the output directory");

  std::string preset_name;
  std::string method = "spa";
  int poles = 15;
  int t_fir = 31;
  double lambda = 0.0;
  bool dump = false;
  auto* preset = app.add_subcommand("preset", "run a built-in example");
  preset->add_option("name", preset_name, "preset name")
      ->required()
      ->check(CLI::IsMember({"power_converter"}));
  preset->add_option("--method", method, "spa or dbc")->check(CLI::IsMember({"spa", "dbc"}));
  preset->add_option("--poles", poles, "SPA pole count (5, 7 or 15)");
  preset->add_option("--T-fir", t_fir, "DBC length");
  preset->add_option("--lambda", lambda, "H-infinity weight")->check(CLI::NonNegativeNumber);
  preset->add_option("-o,--out", out_dir, "override the output directory");
  preset->add_flag("--dump-config", dump, "print the equivalent config and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *sweep) {
      sls::RunConfig cfg = sls::parse_config(config_path);
      if (!out_dir.empty()) cfg.output.directory = out_dir;
      if (*run) return sls::run(cfg, std::cout);
      return sls::run_sweep(cfg, parse_n_list(n_list), !flat, std::cout);
    }
    sls::RunConfig cfg = sls::power_converter_preset();
    cfg.design.lambda = lambda;
    if (method == "dbc") {
      cfg.design.method = sls::Method::dbc;
      cfg.design.T_fir = t_fir;
    } else {
      cfg.design.n_spiral = sls::power_converter_spirals(poles);
    }
    if (!out_dir.empty()) cfg.output.directory = out_dir;
    if (dump) {
      std::cout << sls::serialize_config(cfg);
      return sls::kExitOk;
    }
    return sls::run(cfg, std::cout);
  } catch (const sls::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sls::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sls::kExitSolverFailure;
  }
}

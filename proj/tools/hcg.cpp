/// hcg: geometry export, classification, single runs and deception sweeps
/// for the Homicidal Chauffeur game, driven by a config file.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "hcg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Homicidal Chauffeur game solver and deception sweeps"};
  app.require_subcommand(1);

  std::string path, out_dir;
  bool dump = false;

  struct Sub {
    const char* name;
    const char* help;
    std::optional<hcg::Command> cmd;
  };
  const Sub subs[] = {
      {"geometry", "write barrier, equivocal curve and characteristic fans as CSV", hcg::Command::Geometry},
      {"classify", "print the region of the initial condition under mu1", hcg::Command::Classify},
      {"simulate", "run one closed-loop game and write trajectory.csv", hcg::Command::Simulate},
      {"sweep", "evaluate the deception gain over a lattice and write advantage.csv", hcg::Command::Sweep},
      {"run", "run the command named by the config's 'command' key", std::nullopt},
  };
  std::optional<hcg::Command> chosen;
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("config", path, "config file")->required();
    sc->add_option("-o,--output-dir", out_dir, "override [output] dir");
    sc->add_flag("--print-config", dump, "print the parsed config and exit");
    sc->callback([&chosen, &s] { chosen = s.cmd; });
  }
  CLI11_PARSE(app, argc, argv);

  hcg::RunConfig cfg;
  try {
    cfg = hcg::load_config(path);
  } catch (const hcg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return hcg::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hcg::kExitFailure;
  }
  if (chosen) cfg.command = chosen;
  if (!out_dir.empty()) cfg.dir = out_dir;
  if (dump) {
    std::cout << hcg::serialize_config(cfg);
    return hcg::kExitOk;
  }
  return hcg::execute(cfg, std::cout, std::cerr);
}

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "kamosc/experiments.hpp"
#include "kamosc/kernels.hpp"

int main(int argc, char** argv) {
  CLI::App app{"quasi-periodic normal forms for the quantum harmonic oscillator"};
  app.require_subcommand(1);

  std::string config_path, outdir;
  int threads = 1;
  std::string kernel = "auto";

  const char* env_out = std::getenv("KAMOSC_OUT");
  std::string default_out = env_out ? env_out : "out";

  for (const std::string name :
       {"reduce", "oracle", "spectrum", "nls", "variational", "measure"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "sectioned key = value config file");
    sub->add_option("--out", outdir, "output directory");
    sub->add_option("--threads", threads, "worker cap (serial engine, recorded only)");
    sub->add_option("--kernel", kernel, "kernel backend: auto | scalar | avx2");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();
  if (outdir.empty()) outdir = default_out + "/" + name;

  try {
    kamosc::kernels::select_backend(kernel);
  } catch (const std::exception& e) {
    std::cerr << "kernel selection: " << e.what() << "\n";
    return kamosc::kConfigError;
  }

  kamosc::ConfigSection section;
  if (!config_path.empty()) {
    try {
      auto sections = kamosc::parse_config_file(config_path);
      auto it = sections.find(name);
      if (it == sections.end()) {
        std::cerr << "config error: missing section [" << name << "]\n";
        return kamosc::kConfigError;
      }
      section = it->second;
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kamosc::kConfigError;
    }
  }
  return kamosc::run_experiment(name, std::move(section), outdir, threads);
}

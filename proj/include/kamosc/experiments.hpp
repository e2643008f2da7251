#pragma once

#include <string>

#include "kamosc/config.hpp"
#include "kamosc/reducibility.hpp"

namespace kamosc {

/// Exit codes shared by the CLI and the experiment runners.
enum ExitCode {
  kOk = 0,
  kConfigError = 1,
  kResonanceExclusion = 2,
  kDivergence = 3,
  kIntegrityFailure = 4,
};

/// Named potentials for the reducibility experiments; `flat` carries the
/// Fourier coefficients when V does not depend on x.
struct PotentialSpec {
  QuasiPeriodicPotential pot;
  bool x_independent = false;
  std::vector<std::pair<std::vector<int>, cplx>> flat;
};
PotentialSpec make_potential(const std::string& name, int angles);

int run_experiment(const std::string& name, ConfigSection section, const std::string& outdir,
                   int threads);

/// Formats a double with full round-trip precision (%.17g).
std::string format_full(double v);

}  // namespace kamosc

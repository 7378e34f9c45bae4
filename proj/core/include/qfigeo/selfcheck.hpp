#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qfigeo {

struct PropertyResult {
  std::string name;
  bool pass = false;
  double worst_residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// Runs the library's cross-checking property suite on seeded random families
// (two-path QFI equality, PSD ordering, metric-oracle equivalence, branch
// identities, jump sign, tracking oracle, fidelity axioms).
std::vector<PropertyResult> run_property_suite(std::uint64_t seed, int trials);

}  // namespace qfigeo

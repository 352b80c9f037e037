#pragma once

#include <string>
#include <vector>

#include "bq/config.hpp"

namespace bq {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Invariant and trend suites at their fixed reference settings. The heavy
// checks (5 to 9) share one n = 64 context built on first use.
CheckResult check_spectral_identities();
CheckResult check_solver_exactness();
CheckResult check_geometry();
CheckResult check_flows();
CheckResult check_synthesis();
CheckResult check_localization_identities();
CheckResult check_temperature_trend();
CheckResult check_vorticity_trend();
CheckResult check_steering();
CheckResult check_structure();

std::vector<int> all_checks();
CheckResult run_check(int id);

}  // namespace bq

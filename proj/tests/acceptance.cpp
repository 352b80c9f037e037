#include <cstdio>
#include <cstdlib>
#include <exception>
#include <vector>

#include "bq/verify.hpp"

// One line per criterion; a subset may be named on the command line.
int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) ids = bq::all_checks();
  int failed = 0;
  for (int id : ids) {
    bq::CheckResult r;
    try {
      r = bq::run_check(id);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "exception";
      r.detail = e.what();
    }
    std::printf("CRITERION %d: %s  %s  [%s]  %.1f s\n", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    failed += !r.passed;
  }
  return failed ? 1 : 0;
}

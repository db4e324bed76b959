// Acceptance gate: runs the thirteen pinned desk-scale criteria and prints
// one PASS/FAIL line per criterion. Exit code is the number of failures.

#include <cstdio>
#include <exception>

#include "ntklab/recipes.hpp"

int main() {
  ntklab::AcceptanceContext ctx;
  int failures = 0;
  for (int id = 1; id <= 13; ++id) {
    ntklab::CriterionResult r;
    try {
      r = ntklab::run_criterion(id, ctx);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = ntklab::criterion_name(id);
      r.pass = false;
      r.details.push_back(std::string("exception: ") + e.what());
    }
    std::printf("criterion %02d [%s] %s (%.1fs)\n", r.id,
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds);
    for (const auto& line : r.details) std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  std::printf("%d/13 criteria passed\n", 13 - failures);
  return failures;
}

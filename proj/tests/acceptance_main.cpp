// Acceptance gate: runs every verification suite at its stated tolerance and
// prints one pass/fail line per criterion. Exit 0 iff all blocking suites
// pass; the soft robustness-direction suite is reported but never gates.

#include <cstdlib>
#include <iostream>

#include "bdett/verify.hpp"

int main(int argc, char** argv) {
  bdett::VerifyOptions opts;
  opts.jobs = 4;
  if (const char* jobs = std::getenv("BDETT_VERIFY_JOBS"))
    opts.jobs = static_cast<unsigned>(std::strtoul(jobs, nullptr, 10));
  (void)argc;
  (void)argv;
  const auto results = bdett::run_verify(opts, std::cout);
  return bdett::all_blocking_passed(results) ? EXIT_SUCCESS : EXIT_FAILURE;
}

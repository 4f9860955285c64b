#include "flowtree/verify.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  std::uint64_t seed = 20240601;
  if (argc > 1) seed = std::stoull(argv[1]);
  int failed = 0;
  flowtree::run_acceptance(seed, [&](const flowtree::CriterionResult& r) {
    flowtree::print_result(std::cout, r);
    std::cout.flush();
    failed += r.passed ? 0 : 1;
  });
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion(s) failed") << "\n";
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}

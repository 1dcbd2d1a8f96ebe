// Acceptance suite runner: one PASS/FAIL line per criterion.
//
//   acceptance                 all thirteen criteria
//   acceptance --criterion k   only criterion k
//   acceptance --seed s        seed for the randomized probes (default 1)
//
// Exit status 0 when every selected criterion passes.

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "lio/acceptance.hpp"

int main(int argc, char** argv) {
  lio::AcceptanceOptions opt;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) ids.push_back(std::atoi(argv[++i]));
    else if (!std::strcmp(argv[i], "--seed") && i + 1 < argc) opt.seed = std::strtoull(argv[++i], nullptr, 10);
    else if (!std::strcmp(argv[i], "--fixture") && i + 1 < argc) opt.fixture = argv[++i];
    else {
      std::cerr << "usage: acceptance [--criterion k]... [--seed s] [--fixture path]\n";
      return 2;
    }
  }
  if (ids.empty())
    for (int k = 1; k <= lio::AcceptanceSuite::count; ++k) ids.push_back(k);
  lio::AcceptanceSuite suite(opt);
  int failed = 0;
  for (int k : ids) {
    const auto r = suite.run(k);
    std::cout << r.line() << std::endl;
    failed += r.pass ? 0 : 1;
  }
  std::cout << (failed ? "FAILED: " : "ALL PASSED: ") << ids.size() - failed << "/" << ids.size() << " criteria pass"
            << std::endl;
  return failed ? 1 : 0;
}

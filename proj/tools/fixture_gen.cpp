// Writes the empirical constants the acceptance suite compares against.
//
//   fixture_gen <path> [seed]
//
// The output is committed under tests/fixtures and then left alone: the
// suite checks that later builds do not exceed these values.

#include <cstdlib>
#include <iostream>

#include "lio/acceptance.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: fixture_gen <path> [seed]\n";
    return 2;
  }
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;
  const auto j = lio::empirical_constants(seed);
  lio::write_json(argv[1], j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

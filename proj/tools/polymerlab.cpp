#include <iostream>
#include <string>
#include <vector>

#include "polymerlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return polymerlab::dispatch(args, std::cout, std::cerr);
}

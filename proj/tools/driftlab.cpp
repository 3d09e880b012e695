#include <iostream>
#include <string>
#include <vector>

#include "driftlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return driftlab::run_cli(args, std::cout, std::cerr);
}

#include <iostream>

#include "vrg/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vrg::cli::run(args, std::cout, std::cerr);
}

#include <iostream>
#include <string>
#include <vector>

#include "evs/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return evs::run_cli(args, std::cout, std::cerr, std::cin);
}

#include <iostream>
#include <string>
#include <vector>

#include "mapnav/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mapnav::run_cli(args, std::cout, std::cerr);
}

#include <iostream>
#include <string>
#include <vector>

#include "ekgdisc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ekgdisc::run_cli(std::move(args), std::cout, std::cerr);
}

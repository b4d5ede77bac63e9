#include <iostream>
#include <string>
#include <vector>

#include "distil/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return distil::cli::run(args, std::cout, std::cerr);
}

#include <iostream>
#include <string>
#include <vector>

#include "sivcpt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sivcpt::cli::run(args, std::cout, std::cerr);
}

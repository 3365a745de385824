#include <iostream>
#include <string>
#include <vector>

#include "bpi/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return bpi::cli::run(args, std::cout, std::cerr);
}

#include <iostream>
#include <string>
#include <vector>

#include "infopos/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return infopos::cli::run(args, std::cout, std::cerr);
}

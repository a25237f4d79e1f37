#include <iostream>
#include <string>
#include <vector>

#include "tailrank/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return tailrank::cli::run(args, std::cout, std::cerr);
}

#include <iostream>
#include <string>
#include <vector>

#include "nmetro/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return nmetro::cli::run(args, std::cout, std::cerr);
}

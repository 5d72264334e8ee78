#include <iostream>

#include "decon/cli/cli.hpp"

int main(int argc, char** argv) {
  return decon::cli::main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

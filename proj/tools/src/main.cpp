#include <iostream>

#include "rpr_cli/cli.hpp"

int main(int argc, char** argv) {
  return rpr::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}

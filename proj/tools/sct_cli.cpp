#include <iostream>
#include <string>
#include <vector>

#include "sct/cli_io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sct::cli::run_cli(args, std::cout, std::cerr);
}

#include <iostream>
#include <string>
#include <vector>

#include "pcc_cli.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pcc::cli::run(std::move(args), std::cout, std::cerr);
}

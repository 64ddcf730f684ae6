#include <iostream>
#include <string>
#include <vector>

#include "asrfeat_tools/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return asrfeat::tools::run_cli(args, std::cout, std::cerr);
}

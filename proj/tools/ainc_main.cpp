#include <string>
#include <vector>

#include "ainc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ainc::run_cli(args);
}

#include "gradctrl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gradctrl::run_cli(args);
}

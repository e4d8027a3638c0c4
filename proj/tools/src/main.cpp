#include <string>
#include <vector>

#include "sdmae_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sdmae::cli::run_command(args);
}

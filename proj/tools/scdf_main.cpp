#include <string>
#include <vector>

#include "scdf/cli.hpp"

int main(int argc, char** argv) {
  return scdf::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}

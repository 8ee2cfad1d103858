#include <string>
#include <vector>

#include "trajcurate/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return trajcurate::cli::run(args);
}

#include <iostream>

#include "trajcraft/cli.hpp"

int main(int argc, char** argv) {
  return trajcraft::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

#include <iostream>

#include "jsp/cli.hpp"

int main(int argc, char** argv) {
  return jsp::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

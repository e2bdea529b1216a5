#include <iostream>
#include <string>
#include <vector>

#include "logad/cli.hpp"

int main(int argc, char** argv) {
  return logad::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

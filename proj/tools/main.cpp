#include <iostream>

#include "spineless/cli.hpp"

int main(int argc, char** argv) {
  return spineless::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

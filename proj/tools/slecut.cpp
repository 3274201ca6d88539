#include <iostream>

#include "slecut/cli.hpp"

int main(int argc, char** argv) {
  return slecut::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

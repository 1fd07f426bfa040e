#include <iostream>

#include "vtm/cli/cli.hpp"

int main(int argc, char** argv) {
  return vtm::cli::run(argc, argv, std::cout, std::cerr);
}

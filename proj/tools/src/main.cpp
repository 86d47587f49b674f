#include "sgain_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return sgain::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

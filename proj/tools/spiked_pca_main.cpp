#include <iostream>

#include "spiked_pca/cli.hpp"

int main(int argc, char** argv) {
  return spiked::cli_main(argc, argv, std::cout, std::cerr);
}

#include <iostream>

#include "lilxing/cli/run.hpp"

int main(int argc, char** argv) {
  return lilxing::cli::run_main(argc, argv, std::cout, std::cerr);
}

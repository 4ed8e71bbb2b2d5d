#include <iostream>

#include "trendlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return trendlab::cli::dispatch(args, std::cout, std::cerr);
}

#include <iostream>

#include "ctxslu/cli.hpp"

int main(int argc, char** argv) {
  return ctxslu::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

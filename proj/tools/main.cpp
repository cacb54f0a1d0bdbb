#include <iostream>

#include "strae/cli/cli.hpp"

int main(int argc, char** argv) { return strae::cli::run(argc, argv, std::cout, std::cerr); }

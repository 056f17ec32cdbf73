#include "sepde/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sepde::cli::run(argc, argv, std::cout, std::cerr); }

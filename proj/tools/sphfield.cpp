#include <iostream>

#include "sphfield/cli/app.hpp"

int main(int argc, char** argv) { return sphfield::cli::run_cli(argc, argv, std::cout, std::cerr); }

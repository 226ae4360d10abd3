#include "tnt/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return tnt::cli::run_cli(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "htopt/cli.hpp"

int main(int argc, char** argv) { return htopt::run_cli(argc, argv, std::cout, std::cerr); }

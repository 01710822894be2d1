#include "chansel/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return chansel::run_cli(argc, argv, std::cout, std::cerr); }

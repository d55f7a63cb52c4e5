#include <iostream>

#include "lessketch/cli.hpp"

int main(int argc, char** argv) { return lessketch::cli_main(argc, argv, std::cout, std::cerr); }

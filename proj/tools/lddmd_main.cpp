#include <iostream>

#include "lddmd/cli.hpp"

int main(int argc, char** argv) { return lddmd::run_cli(argc, argv, std::cout, std::cerr); }

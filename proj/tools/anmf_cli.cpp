#include "anmf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return anmf::run_cli(argc, argv, std::cout, std::cerr); }

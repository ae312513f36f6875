#include "fibdim/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fibdim::run_cli(argc, argv, std::cout, std::cerr); }

#include "genbundle/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return genbundle::run_cli(argc, argv, std::cout, std::cerr); }

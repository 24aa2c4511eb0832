#include <iostream>

#include "mdcompat/cli.hpp"

int main(int argc, char** argv) { return mdcompat::run_cli(argc, argv, std::cout, std::cerr); }

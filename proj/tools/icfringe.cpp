#include <iostream>

#include "icfringe/commands.hpp"

int main(int argc, char** argv) { return icfringe::run_cli(argc, argv, std::cout, std::cerr); }

#include "miirl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return miirl::run_cli(argc, argv, std::cout, std::cerr); }

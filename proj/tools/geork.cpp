#include <iostream>

#include "geork/cli.hpp"

int main(int argc, char** argv) { return geork::run_cli(argc, argv, std::cout, std::cerr); }

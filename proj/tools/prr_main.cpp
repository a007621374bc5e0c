#include "prr/harness/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return prr::harness::cli(argc, argv, std::cout, std::cerr); }

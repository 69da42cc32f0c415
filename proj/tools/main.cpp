#include "priorpose/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return priorpose::run_cli(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "cosum/cli.hpp"

int main(int argc, char** argv) { return cosum::cli_dispatch(argc, argv, std::cout, std::cerr); }

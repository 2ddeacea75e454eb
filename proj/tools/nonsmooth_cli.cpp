#include <iostream>

#include "nonsmooth/cli.hpp"

int main(int argc, char** argv) { return nonsmooth::cli::run(argc, argv, std::cout, std::cerr); }

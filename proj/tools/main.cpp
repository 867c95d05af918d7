#include <iostream>

#include "prstab/cli.hpp"

int main(int argc, char** argv) { return prstab::cli::run(argc, argv, std::cout, std::cerr); }

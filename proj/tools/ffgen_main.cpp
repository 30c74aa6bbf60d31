#include <iostream>

#include "ffgen/cli.hpp"

int main(int argc, char** argv) { return ffgen::cli::run(argc, argv, std::cout, std::cerr); }

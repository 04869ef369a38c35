#include <iostream>

#include "srgnn/cli.hpp"

int main(int argc, char** argv) { return srgnn::cli::run(argc, argv, std::cout, std::cerr); }

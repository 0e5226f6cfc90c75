#include <iostream>

#include "ellipse/cli.hpp"

int main(int argc, char** argv) { return ellipse::cli::run(argc, argv, std::cout, std::cerr); }

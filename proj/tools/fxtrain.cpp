#include <iostream>

#include "fxtrain/cli.hpp"

int main(int argc, char** argv) { return fxtrain::cli::run(argc, argv, std::cout, std::cerr); }

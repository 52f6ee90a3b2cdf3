#include <iostream>

#include "reflectix/cli.hpp"

int main(int argc, char** argv) { return reflectix::cli::run(argc, argv, std::cout, std::cerr); }

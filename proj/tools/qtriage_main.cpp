#include <iostream>

#include "qtriage/cli.hpp"

int main(int argc, char** argv) { return qtriage::cli::run(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return q2sim::cli::run(argc, argv, std::cout, std::cerr); }

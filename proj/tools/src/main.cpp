#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return cube_transport::cli::main_entry(argc, argv, std::cout, std::cerr); }

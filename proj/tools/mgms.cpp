#include <iostream>

#include "mgms/cli.hpp"

int main(int argc, char** argv) { return mgms::cli::run(argc, argv, std::cout, std::cerr); }

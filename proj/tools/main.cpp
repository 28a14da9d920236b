#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return sgues::cli::run(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "parkzone/commands.hpp"

int main(int argc, char** argv) { return parkzone::cli::run(argc, argv, std::cout, std::cerr); }

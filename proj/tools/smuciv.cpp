#include <iostream>

#include "smuciv/commands.hpp"

int main(int argc, char** argv) { return smuciv::cli_main(argc, argv, std::cout, std::cerr); }

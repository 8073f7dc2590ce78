#include "stf/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return stf::run_cli(argc, argv, std::cerr); }

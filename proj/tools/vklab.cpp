#include <iostream>

#include "vklab/cli.hpp"

int main(int argc, char** argv) { return vklab::run_cli(argc, argv, std::cout, std::cerr); }

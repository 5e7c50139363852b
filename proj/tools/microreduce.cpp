#include <iostream>

#include "microreduce/cli/cli.hpp"

int main(int argc, char** argv) { return microreduce::cli::run_cli(argc, argv, std::cout, std::cerr); }

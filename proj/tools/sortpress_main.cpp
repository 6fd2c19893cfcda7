#include <iostream>

#include "sortpress/cli.hpp"

int main(int argc, char** argv) { return sortpress::run_cli(argc, argv, std::cout, std::cerr); }

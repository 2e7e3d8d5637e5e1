#include <iostream>

#include "ranknosh/cli.hpp"

int main(int argc, char** argv) { return ranknosh::cli_main(argc, argv, std::cout, std::cerr); }

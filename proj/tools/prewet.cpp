#include <iostream>

#include "prewet/cli.hpp"

int main(int argc, char** argv) { return prewet::cli::run(argc, argv, std::cout, std::cerr); }

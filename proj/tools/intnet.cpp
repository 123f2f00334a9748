#include "cli.hpp"

int main(int argc, char** argv) { return intnet::cli::run_cli(argc, argv, std::cout, std::cerr); }

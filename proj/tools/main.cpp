#include <iostream>

#include "qslp/cli.hpp"

int main(int argc, char** argv) { return qslp::main_entry(argc, argv, std::cout, std::cerr); }

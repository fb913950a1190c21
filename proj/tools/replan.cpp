#include <iostream>

#include "replan/cli.hpp"

int main(int argc, char** argv) { return replan::dispatch(argc, argv, std::cout, std::cerr); }

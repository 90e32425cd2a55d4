#include <iostream>

#include "msbp/cli.h"

auto main(int argc, char** argv) -> int { return msbp::run_cli(argc, argv, std::cout, std::cerr); }

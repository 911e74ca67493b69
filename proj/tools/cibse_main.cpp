// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "cibse/cli.hpp"

int main(int argc, char** argv) { return cibse::cli::run(argc, argv, std::cout, std::cerr); }

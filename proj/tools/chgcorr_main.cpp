// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "chgcorr/cli.hpp"

int main(int argc, char** argv) { return chgcorr::cli::run(argc, argv, std::cout, std::cerr); }

// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include "mrb/commands.hpp"

int main(int argc, char **argv) { return mrb::run_cli(argc, argv, std::cout, std::cerr); }

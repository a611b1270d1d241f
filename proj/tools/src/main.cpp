// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "lingogap_cli/cli.hpp"

int main(int argc, char **argv) {
  return lingogap::cli::dispatch(argc, argv, std::cout, std::cerr);
}

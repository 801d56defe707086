/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include <iostream>

#include "fenshses/cli.hpp"

int main(int argc, char** argv) {
    return fenshses::cli_main(argc, argv, std::cout, std::cerr);
}

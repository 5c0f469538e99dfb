// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#include "rfidalign/cli.hpp"

#include <iostream>

int main(int argc, char **argv)
{
    return rfidalign::cli::run(argc, argv, std::cout, std::cerr);
}

// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 computation error,
// 2 invalid flags.

#ifndef NINT_TOOLS_CLI_HPP
#define NINT_TOOLS_CLI_HPP

#include <iostream>
#include <string>
#include <vector>

#include "nint/nint.hpp"

namespace nint::cli {

int run(int argc, const char* const* argv, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

// Flag value parsers; they throw Error(InvalidArgument) on bad input.
LambdaMode parse_lambda(const std::string& s);
GammaMode parse_gamma(const std::string& s);
Connectivity parse_connectivity(const std::string& s);
std::pair<int, int> parse_size(const std::string& s);
NoiseSpec parse_noise(const std::string& s, std::uint64_t seed);
ResidualVariant parse_variant(const std::string& s);

std::string describe(const LambdaMode& m);
std::string describe(const GammaMode& m);

}  // namespace nint::cli

#endif  // NINT_TOOLS_CLI_HPP

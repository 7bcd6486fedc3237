// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace splat {

// non-finite values or failed numerical preconditions; exits with code 2 at
// the CLI boundary (usage/config problems use the standard exceptions)
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace splat

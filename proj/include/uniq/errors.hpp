#pragma once

#include <stdexcept>
#include <string>

namespace uniq {

// I/O and parse failures (CLI exit code 1).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Eligibility and precondition failures (CLI exit code 2).
struct EligibilityError : std::runtime_error {
    explicit EligibilityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uniq

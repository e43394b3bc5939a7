// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ptkit {

enum class ErrorCode {
    invalid_argument,
    parse,
    structure,
    coverage,
    domain,
    shape,
    frozen,
    config,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the core carries a code so the C boundary can map
// it onto a status value. `line` is the 1-based JSONL line when the error
// came from decoding input, otherwise 0.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, long line = 0)
        : std::runtime_error(message), code_(code), line_(line) {}

    ErrorCode code() const noexcept { return code_; }
    long line() const noexcept { return line_; }

private:
    ErrorCode code_;
    long line_;
};

}  // namespace ptkit

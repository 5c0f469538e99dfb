// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace rfidalign {

enum class ErrorKind {
    Argument,          // caller passed a value outside an operation's domain
    Range,             // time or coordinate outside a supported span
    Format,            // malformed file content
    InsufficientData,  // too few reads to estimate
    Config,            // scenario / grid configuration problem
    PriorViolation,    // side prior selects a side without a peak
    Ambiguity,         // estimate has two indistinguishable peaks
    Io
};

inline const char *to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Range: return "range error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::PriorViolation: return "prior violation";
    case ErrorKind::Ambiguity: return "ambiguous estimate";
    case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was broken so the CLI can map it to an exit code.
class Error : public std::runtime_error
{
  public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

} // namespace rfidalign

#pragma once

#include <stdexcept>
#include <string>

namespace lrfmp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ε^φ and ε^t are undefined at the poles.
struct DegenerateFrame : Error {
    using Error::Error;
};

// An integration bound sits within δ_pole of t = ±1.
struct PoleProximity : Error {
    using Error::Error;
};

struct ContractViolation : Error {
    using Error::Error;
};

// B_N(d) = 0, so the objective is undefined.
struct ZeroElement : Error {
    using Error::Error;
};

struct InvariantViolation : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace lrfmp

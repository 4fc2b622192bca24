#pragma once

#include <stdexcept>
#include <string>

namespace mechdetect {

// Base of everything the library throws. The CLI maps the subclasses onto
// exit codes: InvalidArgument / IoError / ParseError -> 2, UnsuitableData -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad index, out-of-range parameter, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input file: ragged CSV rows, bad mask header, ...
class ParseError : public Error {
public:
    using Error::Error;
};

// Input is well-formed but the detector cannot produce a meaningful verdict
// (single-class mask, too few rows, too few minority samples for the folds).
class UnsuitableData : public Error {
public:
    using Error::Error;
};

} // namespace mechdetect

#pragma once

#include <stdexcept>

namespace soupkit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition violations (bad weights, empty inputs, losses <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed container or file structure (bad magic, bad header, bad JSON).
class FormatError : public Error {
public:
    using Error::Error;
};

// Payload shorter than its declared length.
class LengthError : public Error {
public:
    using Error::Error;
};

// Non-finite values or broken data invariants.
class ValidityError : public Error {
public:
    using Error::Error;
};

// A well-formed field holding an unacceptable value (unknown label, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

// Architecture signature or dimension mismatch.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace soupkit

#pragma once

#include <stdexcept>
#include <string>

namespace waam {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of an operation (v <= 0, dh <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition (missing speeds, mismatched sizes).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Deposition model with zero slope has no inverse.
class NonInvertibleModel : public Error {
public:
    using Error::Error;
};

class ExtrapolationError : public Error {
public:
    using Error::Error;
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

/// Too many empty bins to trust a height profile.
class InsufficientCoverage : public Error {
public:
    using Error::Error;
};

/// Clustering left nothing large enough to call the bead.
class EmptyResultError : public Error {
public:
    using Error::Error;
};

class UndefinedStatistic : public Error {
public:
    using Error::Error;
};

}  // namespace waam

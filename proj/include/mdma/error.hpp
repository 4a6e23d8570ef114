#pragma once

#include <stdexcept>
#include <string>

namespace mdma {

// Base for every error raised by the library. Callers that only care about
// "the model rejected this input" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// Two relay-to-destination rates coincide; the distinct-rate partial
// fraction expansion does not exist. Retry with TiePolicy::Perturb or the
// numerical relay-sum path.
class TieError : public Error {
public:
    using Error::Error;
};

// Subset enumeration refused (too many relays for the closed form).
class SizeError : public Error {
public:
    using Error::Error;
};

// A conditional probability was requested on a null event.
class ConditioningError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mdma

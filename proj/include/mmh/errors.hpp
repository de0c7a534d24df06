#pragma once

#include <stdexcept>
#include <string>

namespace mmh {

// Base of every error raised by the library. Callers that only care about
// "something in the model is wrong" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input that is not a modelling question (wrong sizes, bad indices).
class InvalidInput : public Error {
public:
    using Error::Error;
};

class NegativeRate : public Error {
public:
    using Error::Error;
};

class RowSumNonZero : public Error {
public:
    using Error::Error;
};

class FellerViolated : public Error {
public:
    using Error::Error;
};

class AssumptionViolated : public Error {
public:
    using Error::Error;
};

// A closed form was asked for outside the region where it is defined.
class DomainViolation : public Error {
public:
    using Error::Error;
};

// Numeric Riccati integration escaped to infinity.
class BlowUp : public Error {
public:
    using Error::Error;
};

// The linear ODE integrator could not keep the solution positive and finite.
class StepFailure : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mmh

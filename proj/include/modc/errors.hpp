#pragma once

#include <stdexcept>
#include <string>

namespace modc {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed caller input: dimension mismatch, invalid parameters, bad schema.
class InputError : public Error {
public:
    using Error::Error;
};

/// An oracle produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// The operation does not apply to this kind of function or set
/// (e.g. asking a nonsmooth function for its gradient).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A size guard was exceeded (vertex blowup, grid dimension, simplex grid).
class CapacityError : public Error {
public:
    using Error::Error;
};

/// An iterative method hit its iteration cap before reaching tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A documented precondition does not hold (e.g. infeasible point).
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace modc

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plapflow {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A cell carries a negative effective permeability c + r.
class AssemblyError : public Error {
public:
    AssemblyError(const std::string& what, std::size_t cell) : Error(what), cell_(cell) {}
    [[nodiscard]] std::size_t cell() const noexcept { return cell_; }

private:
    std::size_t cell_;
};

/// Zero (or non-finite) entry in the diagonal conductance block.
class SingularBlock : public Error {
public:
    using Error::Error;
};

/// Krylov iteration did not reach its tolerance.
class KrylovError : public Error {
public:
    KrylovError(const std::string& what, int iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual) {}
    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// Source and Neumann flux do not balance in a pure-Neumann problem.
class IncompatibleSource : public Error {
public:
    IncompatibleSource(const std::string& what, double imbalance) : Error(what), imbalance_(imbalance) {}
    [[nodiscard]] double imbalance() const noexcept { return imbalance_; }

private:
    double imbalance_;
};

/// The adaptive stepper could not make progress above dt_min.
class TimeStepUnderflow : public Error {
public:
    TimeStepUnderflow(const std::string& what, double t, double dt) : Error(what), t_(t), dt_(dt) {}
    [[nodiscard]] double time() const noexcept { return t_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }

private:
    double t_;
    double dt_;
};

#define PLAPFLOW_REQUIRE(cond, ExceptionType, msg) \
    do {                                           \
        if (!(cond)) throw ExceptionType(msg);     \
    } while (false)

}  // namespace plapflow

#pragma once

#include <stdexcept>
#include <string>

namespace vklab {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input does not describe a valid object (bad kernel terms, bad spectrum, bad config).
class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidKernel : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Argument outside the mathematical domain of an operation (e.g. t < 0).
class DomainError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Evaluation too close to a pole -gamma_k of the memory transform.
class PoleError : public Error {
public:
    PoleError(const std::string& what, double pole) : Error(what), pole_(pole) {}
    double pole() const noexcept { return pole_; }

private:
    double pole_;
};

/// Generated kernel family violates sum c_k/gamma_k < 1 and rescaling was disabled.
class FamilyInfeasible : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Parameters outside the regime in which an estimate or asymptotic formula is stated.
class RegimeError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Denominator of the half-plane bound vanishes.
class DegenerateBound : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Closed form undefined at the requested parameter (e.g. D(r) at r = 0 or 1).
class DivergenceError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Base for numerical failures that are not caused by invalid input.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

class BracketingFailure : public NumericalFailure {
public:
    BracketingFailure(const std::string& what, double lo, double hi, double f_lo, double f_hi)
        : NumericalFailure(what), lo_(lo), hi_(hi), f_lo_(f_lo), f_hi_(f_hi) {}
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double f_lo() const noexcept { return f_lo_; }
    double f_hi() const noexcept { return f_hi_; }

private:
    double lo_, hi_, f_lo_, f_hi_;
};

class ConvergenceFailure : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class StiffnessFailure : public NumericalFailure {
public:
    StiffnessFailure(const std::string& what, std::size_t mode, double stiffness_ratio)
        : NumericalFailure(what), mode_(mode), ratio_(stiffness_ratio) {}
    std::size_t mode() const noexcept { return mode_; }
    double stiffness_ratio() const noexcept { return ratio_; }

private:
    std::size_t mode_;
    double ratio_;
};

/// Residue oracle cannot be applied (clustered or multiple poles).
class OracleUnavailable : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

}  // namespace vklab

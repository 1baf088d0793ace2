// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_ERROR_HPP
#define MRB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mrb
{

// Root of the library's exception hierarchy. The CLI maps UsageError to exit code 2 and
// everything numerical to exit code 3.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Invalid input: bad dimensions, parameters out of range, malformed files or configs.
class UsageError : public Error
{
public:
  using Error::Error;
};

class NumericalError : public Error
{
public:
  using Error::Error;
};

// A matrix expected to be symmetric positive definite failed to factorize.
class NotSpdError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

// The least-squares condensation to cotree coordinates was inconsistent, i.e. the input
// vector carried a gradient component.
class ProjectionError : public NumericalError
{
public:
  ProjectionError(const std::string &what, double residual)
    : NumericalError(what), residual_(residual)
  {
  }
  double residual() const { return residual_; }

private:
  double residual_;
};

// Mode tracking could not match modes on [t0, t1] even at maximum bisection depth.
class TrackingError : public NumericalError
{
public:
  TrackingError(const std::string &what, double t0, double t1)
    : NumericalError(what), t0_(t0), t1_(t1)
  {
  }
  double t0() const { return t0_; }
  double t1() const { return t1_; }

private:
  double t0_, t1_;
};

}  // namespace mrb

#endif  // MRB_ERROR_HPP

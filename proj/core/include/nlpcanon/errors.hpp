// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlpcanon {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed expression or problem document. Carries the byte offset of the
/// failure and the set of tokens that would have been accepted there.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset,
             std::vector<std::string> expected = {})
      : Error(message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// A variable reference beyond the declared dimension, e.g. "x5" with n = 2.
class UnknownVariable : public ParseError {
 public:
  UnknownVariable(const std::string& name, std::size_t offset)
      : ParseError("unknown variable '" + name + "'", offset) {}
};

/// A constraint is not active at the base point (|h(0)| or |g(0)| too large).
class ActivityError : public Error {
 public:
  using Error::Error;
};

/// Evaluation outside a function's domain (log of a non-positive value, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A computed quantity is NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// An iteration (Jacobi sweep, Newton, extrapolation) failed to converge.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// The simplex pivot count exceeded its cap.
class IterationCap : public Error {
 public:
  using Error::Error;
};

/// All sampled range points of a pair of quadratic forms are (0, 0); the
/// nondegeneracy hypothesis of the joint-range classification fails.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// A stated hypothesis of an operation does not hold on the given data.
class HypothesisViolated : public Error {
 public:
  explicit HypothesisViolated(const std::string& what,
                              std::vector<double> witness = {},
                              double value = 0.0)
      : Error(what), witness_(std::move(witness)), value_(value) {}

  /// Witness direction (empty when the violation has no natural direction).
  const std::vector<double>& witness() const { return witness_; }
  double value() const { return value_; }

 private:
  std::vector<double> witness_;
  double value_;
};

/// A matrix family is not proportional to a single symmetric matrix.
class NotProportional : public Error {
 public:
  NotProportional(const std::string& what, int worst_index, double residual,
                  std::vector<double> direction)
      : Error(what),
        worst_index_(worst_index),
        residual_(residual),
        direction_(std::move(direction)) {}

  int worst_index() const { return worst_index_; }
  double residual() const { return residual_; }
  /// A direction v for which the column stack [H_1 v, ..., H_m v] has rank
  /// at least two (empty if no such direction was located numerically).
  const std::vector<double>& direction() const { return direction_; }

 private:
  int worst_index_;
  double residual_;
  std::vector<double> direction_;
};

/// Random diffeomorphism generation failed its invertibility check.
class GenerationFailed : public Error {
 public:
  using Error::Error;
};

/// A transformed point leaves the source problem's analysis ball.
class RadiusError : public Error {
 public:
  using Error::Error;
};

/// Newton's method left the validity region of a chart inverse.
class NewtonDivergence : public Error {
 public:
  using Error::Error;
};

/// A rank hypothesis on a gradient stack fails.
class RankError : public Error {
 public:
  using Error::Error;
};

/// The equality-constraint Jacobian has rank below m.
class RankDeficientEqualities : public RankError {
 public:
  using RankError::RankError;
};

/// A caller-supplied precondition (first-order residual, symmetry, ...) fails.
class PreconditionFailed : public Error {
 public:
  using Error::Error;
};

/// An inequality multiplier is negative.
class NegativeMultiplier : public Error {
 public:
  using Error::Error;
};

/// No gamma in the interval makes the restricted Hessian family positive
/// semidefinite; carries a direction on which the form stays negative.
class SeparationFailed : public Error {
 public:
  SeparationFailed(const std::string& what, std::vector<double> witness,
                   double worst_value)
      : Error(what), witness_(std::move(witness)), worst_value_(worst_value) {}

  const std::vector<double>& witness() const { return witness_; }
  double worst_value() const { return worst_value_; }

 private:
  std::vector<double> witness_;
  double worst_value_;
};

/// The multiplier-recovery linear program is infeasible at tolerance.
class MultiplierRecoveryFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace nlpcanon

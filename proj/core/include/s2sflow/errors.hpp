#pragma once

#include <stdexcept>
#include <string>

namespace s2sflow {

/// Malformed or inconsistent input: bad CSV rows, config violations,
/// missing artifacts, violated preconditions on user-supplied data.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (non-convergence, singular system,
/// non-finite likelihood that cannot be recovered).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value outside the mathematical domain of a function
/// (non-positive head, sigma <= 0, probability outside (0,1), ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

}  // namespace s2sflow

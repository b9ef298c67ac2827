#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace sg {

/// Arbitrary-precision integer used for agent counts and coefficients.
using Int = boost::multiprecision::cpp_int;

/// Malformed input: unknown names, schema violations, ill-formed formulas.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The solver could not decide a query the caller needed decided.
class InconclusiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backward saturation ran past its antichain budget.
class ExactComputationTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Explicit state space ran past its node budget.
class OracleTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string to_string(const Int& v) { return v.str(); }

}  // namespace sg

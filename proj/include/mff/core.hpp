#pragma once
//! \file
//! Shared linear-algebra aliases and error types.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace mff {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using MatrixXr = Eigen::MatrixXd;
using VectorXc = Eigen::VectorXcd;
using VectorXr = Eigen::VectorXd;

//! Invalid argument or configuration. Maps to exit code 2 in the CLI.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

//! The evolution produced a rank-deficient orbital matrix (or non-finite
//! entries). Maps to exit code 3 in the CLI.
class NumericalDegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace mff

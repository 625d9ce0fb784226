#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nelson {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using State = StateVector<cplx>;

enum class ErrorKind {
  invalid_shell,
  config,
  budget,
  window,
  velocity_domain,
  truncation,
  iteration,
  contract,
  conditioning,
  divergence,
  phase_undefined,
  undefined_gradient,
  sampling,
  accuracy,
  geometry,
  fit_undefined,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace nelson

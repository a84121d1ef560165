#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace kdvist {

using Real = double;
using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map failures to exit codes in one place.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error {
  using Error::Error;
};
struct DegeneracyError : Error {
  using Error::Error;
};
struct StripViolation : Error {
  using Error::Error;
};
struct IntegrationError : Error {
  using Error::Error;
};
struct ConsistencyError : Error {
  using Error::Error;
};
struct ResolutionError : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct BlowUp : Error {
  using Error::Error;
};

// Least squares line y = intercept + slope*x with coefficient of determination.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// Uniform grid helper: n points starting at x0 with spacing dx.
Vector uniform_grid(double x0, double dx, int n);

}  // namespace kdvist

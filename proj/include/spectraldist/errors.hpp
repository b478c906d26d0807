#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace spectraldist {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

struct CapabilityError : Error {
  using Error::Error;
};

struct BoundaryError : Error {
  using Error::Error;
};

struct SearchError : Error {
  using Error::Error;
};

struct DegeneracyError : Error {
  using Error::Error;
};

struct AccuracyError : Error {
  AccuracyError(const std::string& what, std::complex<double> best, double err)
      : Error(what), best_estimate(best), estimated_error(err) {}
  std::complex<double> best_estimate;
  double estimated_error;
};

struct ConditioningError : Error {
  ConditioningError(const std::string& what, double d) : Error(what), defect(d) {}
  double defect;
};

// Raised when a spectral formula is used outside the regime it was derived for.
struct RegimeError : Error {
  RegimeError(const std::string& what, std::complex<double> at) : Error(what), where(at) {}
  std::complex<double> where;
};

}  // namespace spectraldist

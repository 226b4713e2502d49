#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ismd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
// Particle states are stored one particle per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a mirror map or divergence.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration, dimensions or matrix invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class GraphGenerationError : public Error {
 public:
  using Error::Error;
};

// A theoretical bound whose hypotheses fail (e.g. zero curvature and no interaction).
class VacuousBoundError : public Error {
 public:
  using Error::Error;
};

class CertificationError : public Error {
 public:
  CertificationError(const std::string& what, double last_gap)
      : Error(what), last_gap_(last_gap) {}
  double last_gap() const { return last_gap_; }

 private:
  double last_gap_;
};

}  // namespace ismd

#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace sepde {

/// Precondition violation on a public operation.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A nonlinearity evaluated outside the set where it is defined
/// (e.g. a real power of a negative value).
class DomainError : public std::domain_error {
public:
  DomainError(const std::string& what, Eigen::Index node)
      : std::domain_error(what), node_(node) {}
  Eigen::Index node() const noexcept { return node_; }

private:
  Eigen::Index node_;
};

/// A user-supplied pointwise rule produced a non-finite value.
class EvaluationError : public std::runtime_error {
public:
  EvaluationError(const std::string& what, Eigen::Index node)
      : std::runtime_error(what), node_(node) {}
  Eigen::Index node() const noexcept { return node_; }

private:
  Eigen::Index node_;
};

/// An iterative method hit its iteration cap. Carries the best iterate.
class NonConvergence : public std::runtime_error {
public:
  NonConvergence(const std::string& what, Eigen::VectorXd best, double residual,
                 int iterations)
      : std::runtime_error(what),
        best_(std::move(best)),
        residual_(residual),
        iterations_(iterations) {}

  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  Eigen::VectorXd best_;
  double residual_;
  int iterations_;
};

}  // namespace sepde

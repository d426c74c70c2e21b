#pragma once

#include <stdexcept>
#include <string>

namespace bhvqe {

// Basis or matrix would exceed a configured size limit.
class capacity_error : public std::runtime_error {
 public:
  explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Iterative eigensolver failed to reach the requested residual.
class solver_error : public std::runtime_error {
 public:
  explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

// Shot plan does not cover the Hamiltonian, or covers a term twice.
class plan_error : public std::runtime_error {
 public:
  explicit plan_error(const std::string& what) : std::runtime_error(what) {}
};

// Cost function returned NaN/Inf, or optimizer configuration is unusable.
class optimize_error : public std::runtime_error {
 public:
  explicit optimize_error(const std::string& what) : std::runtime_error(what) {}
};

// Experiment config file failed schema validation.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bhvqe

#pragma once

#include <stdexcept>
#include <string>

namespace metamodel {

/// Invalid user configuration or malformed input document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The computational model (built-in or external) could not be evaluated.
class ModelEvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A surrogate fit could not be completed (degenerate regression, overfit, ...).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metamodel

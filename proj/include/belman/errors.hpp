#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace belman {

// Argument outside the mathematical domain of an operation (negative shape,
// reward outside the family support, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative solver (Newton, bisection, quadrature) failed to reach its
// tolerance within the iteration cap. The CLI maps this to exit code 2.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The focal normalizer of the gamma-exponential pair is infinite for the
// requested exposure.
class DivergentNormalizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration rejected; carries every violation found, not only
// the first. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

}  // namespace belman

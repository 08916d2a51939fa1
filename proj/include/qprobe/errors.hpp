#ifndef QPROBE_ERRORS_HPP
#define QPROBE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qprobe {

/// Thrown when a value violates a documented precondition or type invariant.
class invalid_parameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot produce a result (bracketing,
/// factorization).
class numerical_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw invalid_parameter(message);
}

}  // namespace detail
}  // namespace qprobe

#endif  // QPROBE_ERRORS_HPP

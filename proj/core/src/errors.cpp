#include "ssridge/errors.hpp"

#include <sstream>

namespace ssridge {

namespace {

std::string with_residual(const std::string& what, double residual, int iterations) {
  std::ostringstream os;
  os << what << " (residual " << residual << " after " << iterations << " iterations)";
  return os.str();
}

}  // namespace

ConvergenceError::ConvergenceError(const std::string& what, double residual, int iterations)
    : Error(with_residual(what, residual, iterations)),
      residual_(residual),
      iterations_(iterations) {}

}  // namespace ssridge

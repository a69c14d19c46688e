#ifndef LATENTIC_ERRORS_HPP
#define LATENTIC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace latentic {

// Thrown when a training loss or gradient turns non-finite.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when the adaptive solver runs out of its step budget.
struct SolverNoConvergence : std::runtime_error {
  explicit SolverNoConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a right-hand side or state turns non-finite mid-integration.
struct NumericalBlowup : std::runtime_error {
  explicit NumericalBlowup(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by dataset loading on malformed or truncated files.
struct CorruptDataset : std::runtime_error {
  explicit CorruptDataset(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a rank correlation is requested on a series with zero rank variance.
struct UndefinedCorrelation : std::runtime_error {
  explicit UndefinedCorrelation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace latentic

#endif

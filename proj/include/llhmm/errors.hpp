#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace llhmm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AxisOutOfRange : Error { using Error::Error; };
struct StencilWiderThanGrid : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NonPositiveCoefficient : Error { using Error::Error; };
struct NonSPDMatrix : Error { using Error::Error; };
struct UnknownIdentifier : Error { using Error::Error; };
struct IllConditionedSystem : Error { using Error::Error; };
struct AveragingBoxExceedsData : Error { using Error::Error; };
struct ExtrapolationRequested : Error { using Error::Error; };
struct VanishingInterpolant : Error { using Error::Error; };
struct MissingHistory : Error { using Error::Error; };
struct ZeroNormBeforeProjection : Error { using Error::Error; };
struct NoStableStepFound : Error { using Error::Error; };
struct IncommensurateGrids : Error { using Error::Error; };
struct UnderResolved : Error { using Error::Error; };
struct NoReferenceAvailable : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };

struct SyntaxError : Error {
  std::size_t position;
  SyntaxError(const std::string& what, std::size_t pos)
      : Error(what + " at position " + std::to_string(pos)), position(pos) {}
};

struct SolverDivergence : Error {
  std::vector<double> residual_history;
  SolverDivergence(const std::string& what, std::vector<double> history)
      : Error(what), residual_history(std::move(history)) {}
};

struct FixedPointDivergence : Error {
  int iterations;
  double residual;
  FixedPointDivergence(int iters, double res)
      : Error("fixed-point iteration did not converge after " + std::to_string(iters) +
              " iterations, residual " + std::to_string(res)),
        iterations(iters), residual(res) {}
};

struct InstabilityDetected : Error {
  long step;
  explicit InstabilityDetected(long at_step)
      : Error("instability detected at step " + std::to_string(at_step)), step(at_step) {}
};

}  // namespace llhmm

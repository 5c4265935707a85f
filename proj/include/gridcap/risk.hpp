#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gridcap/common.hpp"

namespace gridcap {

/// Equally weighted background-load samples, one row per draw.
struct ScenarioSet {
  Eigen::MatrixXd samples;  // Ns x N, MW

  int count() const { return static_cast<int>(samples.rows()); }
  int n_buses() const { return static_cast<int>(samples.cols()); }
};

/// Box support of the background load, elementwise lower <= upper.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Confidence level for tail constraints; risk = 1 - alpha.
struct RiskLevel {
  double alpha = 0.0;
};

inline void check_scenarios(const ScenarioSet& scen) {
  if (scen.count() < 1) throw Error(Errc::EmptySample, "scenario set is empty");
  if (!scen.samples.allFinite()) throw Error(Errc::BadInput, "scenario entries must be finite");
}

inline void check_box(const BoxBounds& box) {
  if (box.lower.size() != box.upper.size())
    throw Error(Errc::DimensionMismatch, "box bounds have mismatched lengths");
  for (int i = 0; i < box.lower.size(); ++i) {
    if (box.lower[i] > box.upper[i])
      throw Error(Errc::BadInput, "box lower bound exceeds upper bound at entry " + std::to_string(i));
  }
}

namespace detail {

/// Tail mass (1 - alpha) * Ns in units of samples, snapped to the nearest
/// integer when within rounding error so that e.g. alpha = 0.9, Ns = 10
/// yields exactly one tail sample instead of 0.9999... (which would be
/// rejected as an undersized tail).
inline double tail_mass(double alpha, int n_samples) {
  if (alpha < 0.0 || alpha >= 1.0) throw Error(Errc::BadInput, "alpha must lie in [0, 1)");
  double k = (1.0 - alpha) * static_cast<double>(n_samples);
  const double nearest = std::round(k);
  if (std::abs(k - nearest) <= 1e-9 * std::max(1.0, std::abs(k))) k = nearest;
  return k;
}

}  // namespace detail

/// Empirical CVaR at level alpha: the minimum over zeta of
/// zeta + (1/((1-alpha) Ns)) sum_s (values_s - zeta)_+, evaluated in closed
/// form as the average of the k = (1-alpha) Ns largest values, the last one
/// weighted by the fractional part of k.
inline double empirical_cvar(const Eigen::VectorXd& values, double alpha) {
  const int ns = static_cast<int>(values.size());
  if (ns < 1) throw Error(Errc::EmptySample, "cannot take CVaR of an empty sample");
  const double k = detail::tail_mass(alpha, ns);
  if (k < 1.0)
    throw Error(Errc::AlphaTooHigh, "(1 - alpha) * Ns = " + std::to_string(k) +
                                        " leaves less than one sample in the tail");

  std::vector<double> sorted(values.data(), values.data() + ns);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  const int whole = static_cast<int>(std::floor(k));
  double total = 0.0;
  for (int i = 0; i < whole; ++i) total += sorted[i];
  const double frac = k - static_cast<double>(whole);
  if (frac > 0.0 && whole < ns) total += frac * sorted[whole];
  return total / k;
}

inline double empirical_cvar(const Eigen::VectorXd& values, RiskLevel level) {
  return empirical_cvar(values, level.alpha);
}

/// CVaR commutes with adding a constant. True when the identity holds to
/// 1e-9 on the given sample; exposed as a check because downstream capacity
/// constraints rely on it to move the withdrawal term out of the tail.
inline bool cvar_translation_check(const Eigen::VectorXd& values, double shift, double alpha) {
  const double shifted = empirical_cvar((values.array() + shift).matrix(), alpha);
  const double base = empirical_cvar(values, alpha);
  return std::abs(shifted - (base + shift)) <= 1e-9;
}

/// Rowwise extrema of S * l over a box: worst_up = max, worst_down = min.
/// Splitting S into positive and negative parts makes each row separable,
/// so the extremes are met at per-entry bound choices.
struct BoxExtremes {
  Eigen::VectorXd worst_up;
  Eigen::VectorXd worst_down;
};

inline BoxExtremes box_worst_case(const Eigen::MatrixXd& S, const BoxBounds& box) {
  check_box(box);
  if (S.cols() != box.lower.size())
    throw Error(Errc::DimensionMismatch, "matrix has " + std::to_string(S.cols()) +
                                             " columns but bounds have " +
                                             std::to_string(box.lower.size()) + " entries");
  const Eigen::MatrixXd pos = S.cwiseMax(0.0);
  const Eigen::MatrixXd neg = (-S).cwiseMax(0.0);
  BoxExtremes out;
  out.worst_up = pos * box.upper - neg * box.lower;
  out.worst_down = pos * box.lower - neg * box.upper;
  return out;
}

}  // namespace gridcap

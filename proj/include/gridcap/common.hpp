#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace gridcap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Firm capacity is deliverable under the full load box; flexible capacity
/// tolerates a stated tail risk. Shared by allocation solves and the
/// capacity products put up for auction.
enum class CapacityKind { Firm, Flexible };

/// Error categories raised by the library. Every throw site names the
/// violated contract so callers (and the CLI) can branch on it.
enum class Errc {
  CycleDetected,
  Disconnected,
  BadEdgeCount,
  RootHasRequest,
  IndexOutOfRange,
  DimensionMismatch,
  BadInput,
  EmptySample,
  AlphaTooHigh,
  NoAugmentation,
  InfeasibleInput,
  UnknownItem,
  TooManyItems,
  TooLarge,
  RoundLimitExceeded,
  ParseError,
  SolverFailure,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::Disconnected: return "Disconnected";
    case Errc::BadEdgeCount: return "BadEdgeCount";
    case Errc::RootHasRequest: return "RootHasRequest";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::BadInput: return "BadInput";
    case Errc::EmptySample: return "EmptySample";
    case Errc::AlphaTooHigh: return "AlphaTooHigh";
    case Errc::NoAugmentation: return "NoAugmentation";
    case Errc::InfeasibleInput: return "InfeasibleInput";
    case Errc::UnknownItem: return "UnknownItem";
    case Errc::TooManyItems: return "TooManyItems";
    case Errc::TooLarge: return "TooLarge";
    case Errc::RoundLimitExceeded: return "RoundLimitExceeded";
    case Errc::ParseError: return "ParseError";
    case Errc::SolverFailure: return "SolverFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Deterministic uniform draws on top of a 64-bit generator state.
/// std::uniform_*_distribution is implementation defined, so seeded sweeps
/// map the raw bits themselves to stay reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) { return lo + uniform_int(hi - lo + 1); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace gridcap

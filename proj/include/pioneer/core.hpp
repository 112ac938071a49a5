#pragma once

// Shared scalar/vector/matrix plumbing, error types and the deterministic RNG
// used throughout the library. Everything numeric is 64-bit floating point.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pioneer {

template <class S>
using VecX = std::vector<S>;
using Vec = VecX<double>;

/// Dense row-major matrix. Convention everywhere: rows = input dimension,
/// cols = output dimension; vectors are applied as x^T W.
template <class S>
struct MatX {
  int rows = 0;
  int cols = 0;
  std::vector<S> data;

  MatX() = default;
  MatX(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, S(0.0)) {}

  S& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  const S& operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};
using Mat = MatX<double>;

// ---------------------------------------------------------------------------
// Error taxonomy

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& m) : std::runtime_error("domain: " + m) {}
};
struct SingularityError : std::runtime_error {
  explicit SingularityError(const std::string& m) : std::runtime_error("singularity: " + m) {}
};
struct RangeOverflowError : std::runtime_error {
  explicit RangeOverflowError(const std::string& m) : std::runtime_error("range: " + m) {}
};
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error("numeric: " + m) {}
};
struct ContractViolation : std::runtime_error {
  explicit ContractViolation(const std::string& m) : std::runtime_error("contract: " + m) {}
};
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& m) : std::runtime_error("parse: " + m) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64's output stream is pinned by the standard;
// the double mappings below are explicit so results are identical across
// platforms (std::uniform_real_distribution is not portable).

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return state_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(state_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return state_() % n; }

  /// Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  // xorshift-free: rely on the standardized mt19937_64 stream
  std::mt19937_64 state_;
};

// ---------------------------------------------------------------------------
// Small helpers on plain doubles (the Var overloads live in autodiff.hpp).

inline double value_of(double x) { return x; }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " is not finite");
}

inline void check_finite(const Vec& v, const char* what) {
  for (double x : v) check_finite(x, what);
}

}  // namespace pioneer

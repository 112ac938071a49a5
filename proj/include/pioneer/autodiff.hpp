#pragma once

// Tape-based reverse-mode automatic differentiation over scalars.
//
// The model pipeline is written generically over the scalar type; instantiate
// with double for plain evaluation and with ad::Var to record a tape. Partial
// derivatives are folded into the tape at forward time, so a node is just two
// parent indices and two local partials. Constants (Var without a tape) never
// allocate nodes; mixed constant/tracked arithmetic folds the constant into
// the local partial.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pioneer/core.hpp"

namespace pioneer::ad {

class Tape {
 public:
  static constexpr int32_t kNone = -1;

  int32_t leaf(double) {
    nodes_.push_back({kNone, kNone, 0.0, 0.0});
    return static_cast<int32_t>(nodes_.size()) - 1;
  }

  int32_t unary(int32_t a, double da) {
    nodes_.push_back({a, kNone, da, 0.0});
    return static_cast<int32_t>(nodes_.size()) - 1;
  }

  int32_t binary(int32_t a, int32_t b, double da, double db) {
    nodes_.push_back({a, b, da, db});
    return static_cast<int32_t>(nodes_.size()) - 1;
  }

  /// Reverse sweep seeding d(root)/d(root) = 1. Adjoints of all nodes are
  /// available through adjoint() until the next backward()/clear().
  void backward(int32_t root) {
    adjoint_.assign(nodes_.size(), 0.0);
    adjoint_[root] = 1.0;
    for (int32_t i = root; i >= 0; --i) {
      const double g = adjoint_[i];
      if (g == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.a != kNone) adjoint_[n.a] += g * n.da;
      if (n.b != kNone) adjoint_[n.b] += g * n.db;
    }
  }

  double adjoint(int32_t i) const { return adjoint_[i]; }
  size_t size() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    adjoint_.clear();
  }

 private:
  struct Node {
    int32_t a, b;
    double da, db;
  };
  std::vector<Node> nodes_;
  std::vector<double> adjoint_;
};

/// A scalar tracked on a tape. Default-constructed or double-constructed
/// Vars are constants (no tape, no node).
struct Var {
  double v = 0.0;
  Tape* tape = nullptr;
  int32_t id = Tape::kNone;

  Var() = default;
  Var(double x) : v(x) {}  // NOLINT: implicit constants are the point
  Var(double x, Tape* t) : v(x), tape(t), id(t->leaf(x)) {}

  bool tracked() const { return tape != nullptr; }
};

inline double value_of(const Var& x) { return x.v; }

namespace detail {
inline Tape* tape_of(const Var& a, const Var& b) {
  assert(!(a.tracked() && b.tracked()) || a.tape == b.tape);
  return a.tracked() ? a.tape : b.tape;
}

inline Var make(double v, Tape* t, int32_t id) {
  Var r(v);
  r.tape = t;
  r.id = id;
  return r;
}

// Result of a two-operand op; handles constant operands uniformly.
inline Var combine(const Var& a, const Var& b, double v, double da, double db) {
  Tape* t = tape_of(a, b);
  if (t == nullptr) return Var(v);
  if (a.tracked() && b.tracked()) return make(v, t, t->binary(a.id, b.id, da, db));
  if (a.tracked()) return make(v, t, t->unary(a.id, da));
  return make(v, t, t->unary(b.id, db));
}

inline Var chain(const Var& x, double v, double dv) {
  if (!x.tracked()) return Var(v);
  return make(v, x.tape, x.tape->unary(x.id, dv));
}
}  // namespace detail

// Arithmetic -----------------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
  return detail::combine(a, b, a.v + b.v, 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::combine(a, b, a.v - b.v, 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::combine(a, b, a.v * b.v, b.v, a.v);
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.v;
  return detail::combine(a, b, a.v * inv, inv, -a.v * inv * inv);
}
inline Var operator-(const Var& a) { return detail::chain(a, -a.v, -1.0); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

// Value comparisons (branches in generic code are piecewise in the values).
inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }

// Elementary functions --------------------------------------------------------

inline Var sin(const Var& x) { return detail::chain(x, std::sin(x.v), std::cos(x.v)); }
inline Var cos(const Var& x) { return detail::chain(x, std::cos(x.v), -std::sin(x.v)); }
inline Var tan(const Var& x) {
  const double t = std::tan(x.v);
  return detail::chain(x, t, 1.0 + t * t);
}
inline Var tanh(const Var& x) {
  const double t = std::tanh(x.v);
  return detail::chain(x, t, 1.0 - t * t);
}
inline Var atan(const Var& x) {
  return detail::chain(x, std::atan(x.v), 1.0 / (1.0 + x.v * x.v));
}
inline Var atanh(const Var& x) {
  return detail::chain(x, std::atanh(x.v), 1.0 / (1.0 - x.v * x.v));
}
inline Var sqrt(const Var& x) {
  const double s = std::sqrt(x.v);
  return detail::chain(x, s, 0.5 / s);
}
inline Var exp(const Var& x) {
  const double e = std::exp(x.v);
  return detail::chain(x, e, e);
}
inline Var log(const Var& x) { return detail::chain(x, std::log(x.v), 1.0 / x.v); }
inline Var sigmoid(const Var& x) {
  const double s = pioneer::sigmoid(x.v);
  return detail::chain(x, s, s * (1.0 - s));
}

}  // namespace pioneer::ad

namespace pioneer {

// Generic linear-algebra kernels shared by the double and Var instantiations.
// Unqualified math calls resolve via ADL for Var and via these usings for
// double.

template <class S>
S dot(const VecX<S>& a, const VecX<S>& b) {
  S acc(0.0);
  for (size_t i = 0; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

template <class S>
S norm_sq(const VecX<S>& v) {
  return dot(v, v);
}

template <class S>
S norm(const VecX<S>& v) {
  using std::sqrt;
  return sqrt(norm_sq(v));
}

/// out_j = sum_i x_i W(i, j) — the x^T W convention.
template <class S>
VecX<S> matvec(const MatX<S>& W, const VecX<S>& x) {
  VecX<S> out(static_cast<size_t>(W.cols), S(0.0));
  for (int i = 0; i < W.rows; ++i) {
    for (int j = 0; j < W.cols; ++j) out[j] = out[j] + x[i] * W(i, j);
  }
  return out;
}

template <class S>
VecX<S> scale(const VecX<S>& v, const S& c) {
  VecX<S> out(v.size(), S(0.0));
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] * c;
  return out;
}

template <class S>
VecX<S> add(const VecX<S>& a, const VecX<S>& b) {
  VecX<S> out(a.size(), S(0.0));
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <class S>
VecX<S> sub(const VecX<S>& a, const VecX<S>& b) {
  VecX<S> out(a.size(), S(0.0));
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <class S>
VecX<S> neg(const VecX<S>& v) {
  VecX<S> out(v.size(), S(0.0));
  for (size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}

template <class S>
VecX<S> concat(const VecX<S>& a, const VecX<S>& b) {
  VecX<S> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Numerically shifted softmax. The max-shift is treated as a constant, which
/// leaves the gradient exact (softmax is shift-invariant).
template <class S>
VecX<S> softmax(const VecX<S>& logits) {
  using std::exp;
  double mx = value_of(logits[0]);
  for (const S& l : logits) mx = std::max(mx, value_of(l));
  VecX<S> e(logits.size(), S(0.0));
  S total(0.0);
  for (size_t i = 0; i < logits.size(); ++i) {
    e[i] = exp(logits[i] - S(mx));
    total = total + e[i];
  }
  for (auto& x : e) x = x / total;
  return e;
}

}  // namespace pioneer

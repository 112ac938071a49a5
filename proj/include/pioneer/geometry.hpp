#pragma once

// kappa-stereographic manifold kernel.
//
// The model space S^d_k = { x in R^d : -k ||x||^2 < 1 } carries the conformal
// metric lambda_x^2 I with lambda_x = 2 / (1 + k ||x||^2). Negative curvature
// gives the Poincare ball of radius 1/sqrt(-k), positive curvature the
// stereographic sphere chart (domain = all of R^d), and k = 0 degenerates to
// Euclidean space. All operations are generic over the scalar type so the
// same code path is used for plain evaluation and reverse-mode gradients.

#include <cmath>
#include <vector>

#include "pioneer/autodiff.hpp"
#include "pioneer/core.hpp"

namespace pioneer {

/// Constant sectional curvature. |kappa| below kFlatEps dispatches every
/// operation to its exact Euclidean branch, so there is no division by a
/// vanishing curvature anywhere.
struct Curvature {
  double kappa = -1.0;

  static constexpr double kFlatEps = 1e-12;

  Curvature() = default;
  explicit Curvature(double k) : kappa(k) {
    if (!std::isfinite(k)) throw DomainError("curvature must be finite");
  }

  bool flat() const { return std::abs(kappa) < kFlatEps; }
  bool spherical() const { return kappa >= kFlatEps; }
  bool hyperbolic() const { return kappa <= -kFlatEps; }
  double sqrt_abs() const { return std::sqrt(std::abs(kappa)); }
};

namespace geo {

constexpr double kTinyNorm = 1e-15;
constexpr double kDomainEps = 1e-5;  // boundary margin for the k<0 clamp

/// Curvature-scaled tangent: tan(sqrt(k) x)/sqrt(k) for k>0,
/// tanh(sqrt(-k) x)/sqrt(-k) for k<0, x at k=0. Reduces to the unscaled
/// tan/tanh at |k|=1 and is continuous through k=0.
template <class S>
S tan_kappa(const S& x, const Curvature& k) {
  using std::tan;
  using std::tanh;
  if (!std::isfinite(value_of(x))) throw DomainError("tan_kappa: non-finite input");
  if (k.flat()) return x;
  const double sk = k.sqrt_abs();
  if (k.kappa > 0.0) {
    if (std::abs(value_of(x)) * sk >= M_PI / 2.0 * (1.0 - 1e-12))
      throw RangeOverflowError("tan_kappa: argument at or beyond chart period");
    return tan(x * S(sk)) / S(sk);
  }
  return tanh(x * S(sk)) / S(sk);
}

/// Inverse of tan_kappa. For k<0 the argument must satisfy sqrt(-k)|x| < 1;
/// values within round-off of the boundary are clamped.
template <class S>
S arctan_kappa(const S& x, const Curvature& k) {
  using std::atan;
  using std::atanh;
  if (!std::isfinite(value_of(x))) throw DomainError("arctan_kappa: non-finite input");
  if (k.flat()) return x;
  const double sk = k.sqrt_abs();
  if (k.kappa > 0.0) return atan(x * S(sk)) / S(sk);
  const double a = value_of(x) * sk;
  if (std::abs(a) >= 1.0) {
    if (std::abs(a) > 1.0 + 1e-9)
      throw DomainError("arctan_kappa: argument outside (-1,1)/sqrt(-k)");
    const double clamped = std::copysign(1.0 - 1e-15, a);
    return S(std::atanh(clamped) / sk);  // boundary clamp; treated as constant
  }
  return atanh(x * S(sk)) / S(sk);
}

/// Membership: -k ||x||^2 < 1.
inline bool in_domain(const Vec& x, const Curvature& k) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return -k.kappa * s < 1.0;
}

/// Float-safety clamp. For k<0, vectors at or beyond radius (1-eps)/sqrt(-k)
/// are radially rescaled to that radius; for k>=0 the domain is all of R^d.
template <class S>
VecX<S> project_to_domain(const VecX<S>& x, const Curvature& k) {
  for (const S& c : x) {
    if (!std::isfinite(value_of(c))) throw DomainError("project_to_domain: non-finite input");
  }
  if (k.kappa >= -Curvature::kFlatEps) return x;
  const double max_norm = (1.0 - kDomainEps) / k.sqrt_abs();
  double n2 = 0.0;
  for (const S& c : x) n2 += value_of(c) * value_of(c);
  const double n = std::sqrt(n2);
  if (n < max_norm) return x;
  const S factor = S(max_norm) / norm(x);
  return scale(x, factor);
}

/// Conformal factor lambda = 2 / (1 + k ||x||^2); strictly positive on the
/// domain.
template <class S>
S conformal_factor(const VecX<S>& x, const Curvature& k) {
  const S denom = S(1.0) + S(k.kappa) * norm_sq(x);
  if (value_of(denom) <= 0.0)
    throw DomainError("conformal_factor: point outside the manifold domain");
  return S(2.0) / denom;
}

/// Mobius addition of gyrovectors. Left identity 0 + y = y, left inverse
/// (-x) + x = 0; reduces to vector addition at k = 0.
template <class S>
VecX<S> mobius_add(const VecX<S>& x, const VecX<S>& y, const Curvature& k) {
  const S xy = dot(x, y);
  const S x2 = norm_sq(x);
  const S y2 = norm_sq(y);
  const S kk = S(k.kappa);
  const S denom = S(1.0) - S(2.0) * kk * xy + kk * kk * x2 * y2;
  if (std::abs(value_of(denom)) < kTinyNorm)
    throw SingularityError("mobius_add: antipodal configuration");
  const S cx = (S(1.0) - S(2.0) * kk * xy - kk * y2) / denom;
  const S cy = (S(1.0) + kk * x2) / denom;
  return project_to_domain(add(scale(x, cx), scale(y, cy)), k);
}

/// Mobius scalar multiplication r (x) = tan_k(r arctan_k(||x||)) x/||x||.
/// For k > 0 the tangent argument is reduced by whole periods of tan (an
/// exact identity), so scalars with |r| > 1 wrap around the sphere instead
/// of overflowing the chart.
template <class S>
VecX<S> mobius_scalar(double r, const VecX<S>& x, const Curvature& k) {
  const S n2 = norm_sq(x);
  if (value_of(n2) < kTinyNorm * kTinyNorm || r == 0.0)
    return VecX<S>(x.size(), S(0.0));
  using std::sqrt;
  const S n = sqrt(n2);
  S arg = S(r) * arctan_kappa(n, k);
  if (k.kappa > Curvature::kFlatEps) {
    const double sk = k.sqrt_abs();
    const double wraps = std::round(value_of(arg) * sk / M_PI);
    if (wraps != 0.0) arg = arg - S(wraps * M_PI / sk);
    if (std::abs(value_of(arg)) * sk >= M_PI / 2.0 * (1.0 - 1e-9))
      throw RangeOverflowError("mobius_scalar: scaled point at the chart's infinity");
  }
  const S t = tan_kappa(arg, k);
  return project_to_domain(scale(x, t / n), k);
}

/// Geodesic distance d(x, y) = 2 arctan_k(||(-x) + y||).
template <class S>
S distance(const VecX<S>& x, const VecX<S>& y, const Curvature& k) {
  const VecX<S> m = mobius_add(neg(x), y, k);
  const S n2 = norm_sq(m);
  if (value_of(n2) < kTinyNorm * kTinyNorm) return S(0.0);
  using std::sqrt;
  return S(2.0) * arctan_kappa(sqrt(n2), k);
}

/// Squared distance with the subgradient-zero convention at coincident
/// points (keeps the objective differentiable everywhere it is used).
template <class S>
S distance_sq(const VecX<S>& x, const VecX<S>& y, const Curvature& k) {
  const VecX<S> m = mobius_add(neg(x), y, k);
  const S n2 = norm_sq(m);
  if (value_of(n2) < kTinyNorm * kTinyNorm) return S(0.0);
  using std::sqrt;
  const S d = S(2.0) * arctan_kappa(sqrt(n2), k);
  return d * d;
}

/// Logarithmic map at x: tangent vector pointing to y with
/// ||Log_x(y)|| = (2/lambda_x) arctan_k(||(-x)+y||).
template <class S>
VecX<S> log_map(const VecX<S>& x, const VecX<S>& y, const Curvature& k) {
  const VecX<S> m = mobius_add(neg(x), y, k);
  const S n2 = norm_sq(m);
  if (value_of(n2) < kTinyNorm * kTinyNorm) return VecX<S>(x.size(), S(0.0));
  using std::sqrt;
  const S n = sqrt(n2);
  const S coeff = (S(2.0) / conformal_factor(x, k)) * arctan_kappa(n, k) / n;
  return scale(m, coeff);
}

/// Exponential map at x, inverse of log_map:
/// Exp_x(v) = x (+) tan_k(lambda_x ||v|| / 2) v/||v||.
template <class S>
VecX<S> exp_map(const VecX<S>& x, const VecX<S>& v, const Curvature& k) {
  const S n2 = norm_sq(v);
  if (value_of(n2) < kTinyNorm * kTinyNorm) return x;
  using std::sqrt;
  const S n = sqrt(n2);
  const S t = tan_kappa(conformal_factor(x, k) * n / S(2.0), k);
  return mobius_add(x, scale(v, t / n), k);
}

/// Log at the chart origin: arctan_k(||y||) y/||y|| (lambda_o = 2).
template <class S>
VecX<S> log_map_origin(const VecX<S>& y, const Curvature& k) {
  const S n2 = norm_sq(y);
  if (value_of(n2) < kTinyNorm * kTinyNorm) return VecX<S>(y.size(), S(0.0));
  using std::sqrt;
  const S n = sqrt(n2);
  return scale(y, arctan_kappa(n, k) / n);
}

/// Exp at the chart origin: tan_k(||v||) v/||v||.
template <class S>
VecX<S> exp_map_origin(const VecX<S>& v, const Curvature& k) {
  const S n2 = norm_sq(v);
  if (value_of(n2) < kTinyNorm * kTinyNorm) return v;
  using std::sqrt;
  const S n = sqrt(n2);
  return project_to_domain(scale(v, tan_kappa(n, k) / n), k);
}

/// Manifold-preserving linear transform (d_in -> d_out): rescales W^T z so
/// the output keeps the conformal factor of z. The radicand of the scaling
/// function is computed in its algebraically non-negative form
/// k^-1 [1 - (lambda-1)^2] = 4||z||^2 / (1 + k||z||^2)^2, valid for either
/// curvature sign and at k = 0. Degenerate W^T z = 0 maps to the origin.
template <class S>
VecX<S> gyro_transform(const MatX<S>& W, const VecX<S>& z, const Curvature& k) {
  const VecX<S> y = matvec(W, z);
  const S z2 = norm_sq(z);
  const S y2 = norm_sq(y);
  if (value_of(z2) < kTinyNorm * kTinyNorm || value_of(y2) < kTinyNorm * kTinyNorm)
    return VecX<S>(static_cast<size_t>(W.cols), S(0.0));
  using std::sqrt;
  const S one_plus = S(1.0) + S(k.kappa) * z2;
  const S radicand = S(4.0) * z2 / (one_plus * one_plus);
  const S lambda = S(2.0) / one_plus;
  const S f_scal = sqrt(radicand) / (lambda * sqrt(y2));
  return project_to_domain(scale(y, f_scal), k);
}

/// Weighted gyro-midpoint: (1/2) (x) sum_i [a_i lambda_i / sum_j a_j (lambda_j - 1)] h_i.
/// Weights must be non-negative and not all zero; the aggregation is
/// invariant to positive rescaling of the weights.
template <class S>
VecX<S> gyro_midpoint(const std::vector<VecX<S>>& points, const VecX<S>& weights,
                      const Curvature& k) {
  if (points.empty() || points.size() != weights.size())
    throw DomainError("gyro_midpoint: empty input or weight/point mismatch");
  VecX<S> lambdas(points.size(), S(0.0));
  S denom(0.0);
  for (size_t i = 0; i < points.size(); ++i) {
    if (value_of(weights[i]) < 0.0) throw DomainError("gyro_midpoint: negative weight");
    lambdas[i] = conformal_factor(points[i], k);
    denom = denom + weights[i] * (lambdas[i] - S(1.0));
  }
  if (std::abs(value_of(denom)) < 1e-12)
    throw DomainError("gyro_midpoint: degenerate aggregation (zero denominator)");
  VecX<S> acc(points[0].size(), S(0.0));
  for (size_t i = 0; i < points.size(); ++i)
    acc = add(acc, scale(points[i], weights[i] * lambdas[i] / denom));
  return mobius_scalar(0.5, acc, k);
}

// ---------------------------------------------------------------------------
// Lorentz/spherical model and the stereographic projection Phi between it and
// the kappa-stereographic chart. Used as the membership oracle for the
// manifold-preserving transform: points of L^d_k satisfy
// sgn(k) x_t^2 + ||x_s||^2 = 1/k.

struct LorentzPoint {
  double time_coord = 0.0;
  Vec space_coords;
};

/// Residual of the Lorentz manifold equation; zero (to round-off) on L^d_k.
inline double lorentz_residual(const LorentzPoint& p, const Curvature& k) {
  if (k.flat()) throw DomainError("lorentz_residual: undefined at kappa = 0");
  const double sgn = k.kappa > 0.0 ? 1.0 : -1.0;
  double s2 = 0.0;
  for (double c : p.space_coords) s2 += c * c;
  return sgn * p.time_coord * p.time_coord + s2 - 1.0 / k.kappa;
}

/// Phi^{-1}: chart point -> Lorentz/spherical model,
/// ((lambda_z - 1)/sqrt|k|, lambda_z z).
inline LorentzPoint stereo_unproject(const Vec& z, const Curvature& k) {
  if (k.flat()) throw DomainError("stereo_unproject: no Lorentz model at kappa = 0");
  const double lambda = conformal_factor(z, k);
  LorentzPoint p;
  p.time_coord = (lambda - 1.0) / k.sqrt_abs();
  p.space_coords = scale(z, lambda);
  return p;
}

/// Phi: Lorentz/spherical model -> chart, z = x_s / (1 + sqrt|k| x_t).
inline Vec stereo_project(const LorentzPoint& p, const Curvature& k) {
  if (k.flat()) throw DomainError("stereo_project: no Lorentz model at kappa = 0");
  const double denom = 1.0 + k.sqrt_abs() * p.time_coord;
  if (std::abs(denom) < kTinyNorm)
    throw SingularityError("stereo_project: point at the chart's infinity");
  return scale(p.space_coords, 1.0 / denom);
}

}  // namespace geo
}  // namespace pioneer

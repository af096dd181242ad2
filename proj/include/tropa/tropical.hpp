#pragma once

// Exact max-plus (tropical) arithmetic over the extended reals, the Hilbert
// projective metric, and the tropicalization / devaluation maps.
//
// The additive identity ("bottom") is a true -infinity, carried as the IEEE
// value so that it is exactly representable; all semiring operations branch on
// it explicitly and never rely on float sentinels.

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace trop {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LayoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An element of (R u {-inf}, max, +). Default-constructs to bottom, the
/// additive identity.
class TropValue {
 public:
  constexpr TropValue() : v_(-std::numeric_limits<double>::infinity()) {}
  constexpr explicit TropValue(double v) : v_(v) {}

  static constexpr TropValue bottom() { return TropValue(); }
  static constexpr TropValue zero() { return TropValue(0.0); }  // mult. identity

  constexpr bool is_bottom() const { return std::isinf(v_) && v_ < 0; }
  constexpr bool is_finite() const { return !is_bottom(); }

  /// Underlying extended real (-inf for bottom).
  constexpr double raw() const { return v_; }

  /// Finite payload; throws on bottom.
  double finite() const {
    if (is_bottom()) throw DomainError("TropValue: bottom has no finite value");
    return v_;
  }

  friend constexpr bool operator==(TropValue a, TropValue b) { return a.v_ == b.v_; }
  friend constexpr bool operator!=(TropValue a, TropValue b) { return a.v_ != b.v_; }
  friend constexpr bool operator<(TropValue a, TropValue b) { return a.v_ < b.v_; }
  friend constexpr bool operator<=(TropValue a, TropValue b) { return a.v_ <= b.v_; }
  friend constexpr bool operator>(TropValue a, TropValue b) { return a.v_ > b.v_; }
  friend constexpr bool operator>=(TropValue a, TropValue b) { return a.v_ >= b.v_; }

  friend std::ostream& operator<<(std::ostream& os, TropValue v) {
    if (v.is_bottom()) return os << "-inf";
    return os << v.v_;
  }

 private:
  double v_;
};

/// Tropical sum: max(a, b); bottom is neutral.
constexpr TropValue trop_add(TropValue a, TropValue b) {
  return a.raw() >= b.raw() ? a : b;
}

/// Tropical product: a + b; bottom absorbs.
constexpr TropValue trop_mul(TropValue a, TropValue b) {
  if (a.is_bottom() || b.is_bottom()) return TropValue::bottom();
  return TropValue(a.raw() + b.raw());
}

/// Tropical quotient: a - b. Defined for finite b only.
inline TropValue trop_div(TropValue a, TropValue b) {
  if (b.is_bottom()) throw DomainError("trop_div: quotient by bottom");
  if (a.is_bottom()) return TropValue::bottom();
  return TropValue(a.raw() - b.raw());
}

}  // namespace trop

namespace Eigen {
template <>
struct NumTraits<trop::TropValue> {
  typedef trop::TropValue Real;
  typedef trop::TropValue NonInteger;
  typedef trop::TropValue Nested;
  typedef trop::TropValue Literal;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 1,
    MulCost = 1
  };
  static inline Real epsilon() { return trop::TropValue(0.0); }
  static inline Real dummy_precision() { return trop::TropValue(0.0); }
  static inline int digits10() { return std::numeric_limits<double>::digits10; }
};
}  // namespace Eigen

namespace trop {

using TropMatrix = Eigen::Matrix<TropValue, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using TropVector = Eigen::Matrix<TropValue, Eigen::Dynamic, 1>;

// Dense real types used across the project; tokens are rows, so row-major.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

inline TropVector trop_vec(std::initializer_list<double> xs) {
  TropVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = TropValue(x);
  return v;
}

inline TropVector to_trop(const Vec& x) {
  TropVector v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = TropValue(x(i));
  return v;
}

/// Tropical identity: 0 on the diagonal, bottom elsewhere.
inline TropMatrix trop_identity(Eigen::Index n) {
  TropMatrix m(n, n);
  m.setConstant(TropValue::bottom());
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = TropValue::zero();
  return m;
}

/// Max-plus matrix product: out(i,j) = max_t (A(i,t) + B(t,j)).
inline TropMatrix maxplus_matmul(const TropMatrix& a, const TropMatrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("maxplus_matmul: inner dimensions " + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()));
  TropMatrix out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      TropValue acc = TropValue::bottom();
      for (Eigen::Index t = 0; t < a.cols(); ++t) {
        acc = trop_add(acc, trop_mul(a(i, t), b(t, j)));
      }
      out(i, j) = acc;
    }
  }
  return out;
}

inline TropVector maxplus_apply(const TropMatrix& a, const TropVector& x) {
  TropMatrix col(x.size(), 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) col(i, 0) = x(i);
  TropMatrix out = maxplus_matmul(a, col);
  TropVector y(out.rows());
  for (Eigen::Index i = 0; i < out.rows(); ++i) y(i) = out(i, 0);
  return y;
}

/// Hilbert projective metric on finite real vectors:
/// d(x, y) = max_i (x_i - y_i) - min_i (x_i - y_i).
template <typename DA, typename DB>
double hilbert_distance(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& y) {
  if (x.size() != y.size() || x.size() < 1)
    throw ShapeError("hilbert_distance: vectors must have equal length >= 1");
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x(i) - y(i);
    if (!std::isfinite(d)) throw DomainError("hilbert_distance: non-finite coordinate");
    hi = std::max(hi, d);
    lo = std::min(lo, d);
  }
  return hi - lo;
}

inline double hilbert_distance(const TropVector& x, const TropVector& y) {
  if (x.size() != y.size() || x.size() < 1)
    throw ShapeError("hilbert_distance: vectors must have equal length >= 1");
  Vec xr(x.size()), yr(y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i).is_bottom() || y(i).is_bottom())
      throw DomainError("hilbert_distance: bottom coordinate");
    xr(i) = x(i).raw();
    yr(i) = y(i).raw();
  }
  return hilbert_distance(xr, yr);
}

// Epsilon floor of the differentiable surrogate log(relu(x) + eps); the exact
// map below is the bottom-producing one and the two are never mixed.
inline constexpr double kTropicalizeEps = 1e-9;

/// Exact tropicalization: entry-wise log(x) - lambda(row) for x > 0, bottom
/// otherwise. lambda has one entry per row (token position).
inline TropMatrix tropicalize(const Mat& x, const Vec& lambda) {
  if (lambda.size() != x.rows())
    throw ShapeError("tropicalize: shift length " + std::to_string(lambda.size()) +
                     " != row count " + std::to_string(x.rows()));
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (!std::isfinite(lambda(i))) throw DomainError("tropicalize: non-finite shift");
  }
  TropMatrix z(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      z(i, j) = x(i, j) > 0.0 ? TropValue(std::log(x(i, j)) - lambda(i))
                              : TropValue::bottom();
    }
  }
  return z;
}

/// Smooth inverse map: entry-wise exp, bottom -> 0.
inline Mat devaluate(const TropMatrix& z) {
  Mat out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      out(i, j) = std::exp(z(i, j).raw());
    }
  }
  return out;
}

/// Canonical simplex representative: subtract each row's maximum, so every
/// row's maximum entry becomes exactly 0. Rows that are entirely bottom stay
/// bottom.
inline TropMatrix simplex_normalize(const TropMatrix& z) {
  TropMatrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    TropValue rowmax = TropValue::bottom();
    for (Eigen::Index j = 0; j < z.cols(); ++j) rowmax = trop_add(rowmax, z(i, j));
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      out(i, j) = rowmax.is_bottom() ? z(i, j) : TropValue(z(i, j).raw() - rowmax.raw());
    }
  }
  return out;
}

}  // namespace trop

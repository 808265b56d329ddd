#pragma once

// Small dense linear algebra for orders up to ~8: partially pivoted LU,
// determinant, Faddeev-LeVerrier characteristic polynomial, Durand-Kerner
// polynomial roots, eigenvalues/spectral bound, the cubic Hurwitz test,
// operator 2-norm and the matrix exponential.
//
// Everything is templated on the scalar type and works on Eigen dense
// matrices; Eigen is used as storage only.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "tikhonov/core.hpp"

namespace tikhonov::dense {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Maximum absolute row sum.
template <typename Derived>
typename Derived::Scalar norm_inf(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

// Pivots below this fraction of ||A||_inf are treated as zero.
inline constexpr double kPivotThreshold = 1e-13;

/// LU factorisation PA = LU with partial pivoting. Construction throws
/// SingularMatrix when a pivot falls under 1e-13 * ||A||_inf.
template <typename Scalar>
class Lu {
 public:
  explicit Lu(Mat<Scalar> a) : lu_(std::move(a)), perm_(lu_.rows()) {
    if (lu_.rows() != lu_.cols()) throw Error("Lu: matrix must be square");
    const Eigen::Index n = lu_.rows();
    norm_ = norm_inf(lu_);
    min_pivot_ = n == 0 ? Scalar(0) : std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) perm_[i] = i;

    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index p = k;
      Scalar best = std::abs(lu_(k, k));
      for (Eigen::Index i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      min_pivot_ = std::min(min_pivot_, best);
      if (!(best > Scalar(kPivotThreshold) * norm_) || best == Scalar(0)) {
        singular_ = true;
        continue;
      }
      if (p != k) {
        lu_.row(k).swap(lu_.row(p));
        std::swap(perm_[k], perm_[p]);
        sign_ = -sign_;
      }
      for (Eigen::Index i = k + 1; i < n; ++i) {
        lu_(i, k) /= lu_(k, k);
        lu_.row(i).tail(n - k - 1) -= lu_(i, k) * lu_.row(k).tail(n - k - 1);
      }
    }
  }

  bool singular() const { return singular_; }
  /// Smallest pivot magnitude encountered (absolute).
  Scalar min_pivot() const { return min_pivot_; }
  /// min_pivot / ||A||_inf, the quantity compared against the threshold.
  Scalar relative_min_pivot() const { return norm_ > 0 ? min_pivot_ / norm_ : Scalar(0); }

  Scalar determinant() const {
    Scalar det = sign_;
    for (Eigen::Index i = 0; i < lu_.rows(); ++i) det *= lu_(i, i);
    return det;
  }

  template <typename Derived>
  Mat<Scalar> solve(const Eigen::MatrixBase<Derived>& b) const {
    if (singular_) throw SingularMatrix("Lu::solve: matrix is singular to working precision");
    const Eigen::Index n = lu_.rows();
    if (b.rows() != n) throw Error("Lu::solve: right-hand side is not conformable");
    Mat<Scalar> x(n, b.cols());
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) = b.row(perm_[i]);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) x.row(i) -= lu_(i, j) * x.row(j);
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      for (Eigen::Index j = i + 1; j < n; ++j) x.row(i) -= lu_(i, j) * x.row(j);
      x.row(i) /= lu_(i, i);
    }
    return x;
  }

 private:
  Mat<Scalar> lu_;
  std::vector<Eigen::Index> perm_;
  Scalar norm_ = 0;
  Scalar min_pivot_ = 0;
  Scalar sign_ = 1;
  bool singular_ = false;
};

template <typename Scalar>
Vec<Scalar> lu_solve(const Mat<Scalar>& a, const Vec<Scalar>& b) {
  Lu<Scalar> lu(a);
  if (lu.singular()) throw SingularMatrix("lu_solve: pivot below 1e-13*||A||");
  return lu.solve(b);
}

template <typename Scalar>
Scalar determinant(const Mat<Scalar>& a) {
  Lu<Scalar> lu(a);
  return lu.singular() ? Scalar(0) : lu.determinant();
}

/// Monic characteristic polynomial det(lambda I - A) by Faddeev-LeVerrier.
/// Returns coefficients in descending powers: [1, a1, ..., an].
template <typename Scalar>
Vec<Scalar> char_poly(const Mat<Scalar>& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw Error("char_poly: matrix must be square");
  Vec<Scalar> c(n + 1);
  c[0] = 1;
  Mat<Scalar> m = Mat<Scalar>::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    const Mat<Scalar> am = a * m;
    c[k] = -am.trace() / Scalar(k);
    m = am + c[k] * Mat<Scalar>::Identity(n, n);
  }
  return c;
}

template <typename Scalar>
std::complex<Scalar> poly_eval(const Vec<Scalar>& coeffs, std::complex<Scalar> z) {
  std::complex<Scalar> acc = coeffs[0];
  for (Eigen::Index k = 1; k < coeffs.size(); ++k) acc = acc * z + coeffs[k];
  return acc;
}

namespace detail {

// |p(z)| / sum |a_k| |z|^(n-k): the normwise backward error of a root.
template <typename Scalar>
Scalar backward_error(const Vec<Scalar>& coeffs, std::complex<Scalar> z) {
  Scalar scale = 0;
  const Scalar r = std::abs(z);
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) scale = scale * r + std::abs(coeffs[k]);
  const Scalar res = std::abs(poly_eval(coeffs, z));
  return scale > 0 ? res / scale : res;
}

}  // namespace detail

/// All roots of a monic real polynomial (descending coefficients) by
/// simultaneous Durand-Kerner iteration. Throws NoConvergence when the
/// backward error is still above 1e-10 after max_iters sweeps.
template <typename Scalar>
std::vector<std::complex<Scalar>> poly_roots(const Vec<Scalar>& coeffs, int max_iters = 500) {
  using C = std::complex<Scalar>;
  const Eigen::Index n = coeffs.size() - 1;
  if (n < 1) return {};
  Vec<Scalar> a = coeffs / coeffs[0];

  Scalar radius = 0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    radius = std::max(radius, std::pow(std::abs(a[k]), Scalar(1) / Scalar(k)));
  }
  if (radius == Scalar(0)) return std::vector<C>(static_cast<std::size_t>(n), C(0));

  std::vector<C> z(static_cast<std::size_t>(n));
  const C seed(Scalar(0.4), Scalar(0.9));
  C w = seed;
  for (auto& zi : z) {
    zi = radius * w / std::abs(w);
    w *= seed;
  }

  const Scalar accept = Scalar(1e-10);
  const Scalar tight = Scalar(1e-12);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  int settled = 0;
  for (int iter = 0; iter < max_iters; ++iter) {
    Scalar max_step = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      C denom(1);
      for (std::size_t j = 0; j < z.size(); ++j) {
        if (j == i) continue;
        C diff = z[i] - z[j];
        if (diff == C(0)) diff = C(eps * (1 + std::abs(z[i])), eps);
        denom *= diff;
      }
      const C step = poly_eval(a, z[i]) / denom;
      z[i] -= step;
      max_step = std::max(max_step, std::abs(step) / (1 + std::abs(z[i])));
    }
    Scalar worst = 0;
    for (const auto& zi : z) worst = std::max(worst, detail::backward_error(a, zi));
    if (worst <= tight) {
      // Simple roots settle quadratically; clustered roots jitter at the
      // sqrt(eps) level, so stop after a few sweeps either way.
      if (max_step <= 8 * eps || ++settled >= 8) return z;
    }
  }
  Scalar worst = 0;
  for (const auto& zi : z) worst = std::max(worst, detail::backward_error(a, zi));
  if (worst <= accept) return z;
  throw NoConvergence("poly_roots: Durand-Kerner did not converge in the iteration budget");
}

template <typename Scalar>
struct Spectrum {
  std::vector<std::complex<Scalar>> eigenvalues;
  Scalar spectral_bound = -std::numeric_limits<Scalar>::infinity();
};

template <typename Scalar>
bool is_triangular(const Mat<Scalar>& a) {
  return a.template triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0) ||
         a.template triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero(0);
}

/// Eigenvalues with multiplicity. Triangular input returns its diagonal
/// exactly; everything else goes through char_poly + Durand-Kerner.
template <typename Scalar>
Spectrum<Scalar> eigenvalues(const Mat<Scalar>& a) {
  if (a.rows() != a.cols()) throw Error("eigenvalues: matrix must be square");
  if (!a.allFinite()) throw NonFiniteOutput("eigenvalues: non-finite matrix entries");
  Spectrum<Scalar> out;
  if (is_triangular(a)) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.eigenvalues.emplace_back(a(i, i), Scalar(0));
  } else {
    // Scale to unit size so the coefficient magnitudes stay balanced.
    const Scalar s = a.cwiseAbs().maxCoeff();
    auto roots = poly_roots<Scalar>(char_poly<Scalar>(a / s));
    for (auto& r : roots) out.eigenvalues.push_back(r * s);
  }
  for (const auto& l : out.eigenvalues) out.spectral_bound = std::max(out.spectral_bound, l.real());
  return out;
}

/// s(A) = max Re(lambda).
template <typename Scalar>
Scalar spectral_bound(const Mat<Scalar>& a) {
  return eigenvalues(a).spectral_bound;
}

/// Hurwitz test for the monic cubic lambda^3 + a1 lambda^2 + a2 lambda + a3.
template <typename Scalar>
constexpr bool hurwitz_cubic(Scalar a1, Scalar a2, Scalar a3) {
  return a1 > 0 && a2 > 0 && a3 > 0 && a1 * a2 > a3;
}

/// Operator 2-norm as sqrt of the largest eigenvalue of A^T A.
template <typename Scalar>
Scalar norm2(const Mat<Scalar>& a) {
  const Scalar s = a.size() == 0 ? Scalar(0) : a.cwiseAbs().maxCoeff();
  if (s == Scalar(0) || !std::isfinite(s)) return s;
  const Mat<Scalar> b = a / s;
  const Mat<Scalar> gram = b.transpose() * b;
  Scalar top = 0;
  for (const auto& l : eigenvalues<Scalar>(gram).eigenvalues) top = std::max(top, l.real());
  return s * std::sqrt(top);
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor core.
template <typename Scalar>
Mat<Scalar> expm(const Mat<Scalar>& a) {
  const Eigen::Index n = a.rows();
  const Scalar norm = norm_inf(a);
  int squarings = 0;
  if (norm > Scalar(0.5)) squarings = static_cast<int>(std::ceil(std::log2(norm / Scalar(0.5))));
  const Mat<Scalar> scaled = a / std::ldexp(Scalar(1), squarings);

  Mat<Scalar> term = Mat<Scalar>::Identity(n, n);
  Mat<Scalar> sum = term;
  for (int k = 1; k <= 18; ++k) {
    term = term * scaled / Scalar(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace tikhonov::dense

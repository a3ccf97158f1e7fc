#ifndef CBOPT_LINALG_HPP
#define CBOPT_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cbopt {

using Vec = std::vector<double>;

/// Dense symmetric matrix, row-major.
struct Mat {
  int d = 0;
  std::vector<double> a;  // d*d

  Mat() = default;
  explicit Mat(int dim) : d(dim), a(std::size_t(dim) * std::size_t(dim), 0.0) {}
  double& operator()(int i, int j) { return a[std::size_t(i) * std::size_t(d) + std::size_t(j)]; }
  double operator()(int i, int j) const {
    return a[std::size_t(i) * std::size_t(d) + std::size_t(j)];
  }

  static Mat identity(int dim) {
    Mat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline Vec mat_vec(const Mat& Q, const Vec& x) {
  Vec y(std::size_t(Q.d), 0.0);
  for (int i = 0; i < Q.d; ++i) {
    double s = 0.0;
    for (int j = 0; j < Q.d; ++j) s += Q(i, j) * x[std::size_t(j)];
    y[std::size_t(i)] = s;
  }
  return y;
}

inline double quad_form(const Mat& Q, const Vec& u) { return dot(u, mat_vec(Q, u)); }

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, iterated to
/// off-diagonal Frobenius norm 1e-10. Intended for the small d used here.
inline Vec jacobi_eigenvalues(const Mat& Q0, double tol = 1e-10, int max_sweeps = 100) {
  Mat Q = Q0;
  int d = Q.d;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += 2.0 * Q(i, j) * Q(i, j);
    if (std::sqrt(off) < tol) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        if (Q(p, q) == 0.0) continue;
        double theta = (Q(q, q) - Q(p, p)) / (2.0 * Q(p, q));
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < d; ++k) {
          double qpk = Q(p, k), qqk = Q(q, k);
          Q(p, k) = c * qpk - s * qqk;
          Q(q, k) = s * qpk + c * qqk;
        }
        for (int k = 0; k < d; ++k) {
          double qkp = Q(k, p), qkq = Q(k, q);
          Q(k, p) = c * qkp - s * qkq;
          Q(k, q) = s * qkp + c * qkq;
        }
      }
    }
  }
  Vec eig(std::size_t(d), 0.0);
  for (int i = 0; i < d; ++i) eig[std::size_t(i)] = Q(i, i);
  return eig;
}

inline std::pair<double, double> eigen_extremes(const Mat& Q) {
  Vec eig = jacobi_eigenvalues(Q);
  double lo = eig[0], hi = eig[0];
  for (double e : eig) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  return {lo, hi};
}

inline void require_positive_definite(const Mat& Q) {
  if (Q.d <= 0) throw std::invalid_argument("Q must be non-empty");
  for (int i = 0; i < Q.d; ++i)
    for (int j = 0; j < Q.d; ++j)
      if (std::abs(Q(i, j) - Q(j, i)) > 1e-9 * (1.0 + std::abs(Q(i, j))))
        throw std::invalid_argument("Q must be symmetric");
  if (eigen_extremes(Q).first <= 0.0)
    throw std::invalid_argument("Q must be positive definite");
}

}  // namespace cbopt

#endif  // CBOPT_LINALG_HPP

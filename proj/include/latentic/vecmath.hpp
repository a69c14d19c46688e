#ifndef LATENTIC_VECMATH_HPP
#define LATENTIC_VECMATH_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace latentic {

using Vec = std::vector<double>;

// Dense row-major matrix, sized once and mutated in place.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> w;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), w(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int r) { return w.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return w.data() + static_cast<size_t>(r) * cols; }
  double& at(int r, int c) { return w[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return w[static_cast<size_t>(r) * cols + c]; }
};

inline double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// y = M x
inline void matvec(const Mat& m, const double* x, double* y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* w = m.row(r);
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += w[c] * x[c];
    y[r] = s;
  }
}

// y = M^T x  (accumulated into y, which must be zeroed by the caller)
inline void matvec_t_acc(const Mat& m, const double* x, double* y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* w = m.row(r);
    const double xr = x[r];
    for (int c = 0; c < m.cols; ++c) y[c] += w[c] * xr;
  }
}

// M += a b^T
inline void outer_acc(Mat& m, const double* a, const double* b) {
  for (int r = 0; r < m.rows; ++r) {
    double* w = m.row(r);
    const double ar = a[r];
    for (int c = 0; c < m.cols; ++c) w[c] += ar * b[c];
  }
}

inline void axpy(double alpha, const Vec& x, Vec& y) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
  Vec y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
  return y;
}

inline Vec sub(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  Vec y(a.size());
  for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] - b[i];
  return y;
}

inline Vec add(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  Vec y(a.size());
  for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(const Mat& m) {
  for (double v : m.w)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace latentic

#endif

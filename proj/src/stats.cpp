#include "latentic/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "latentic/errors.hpp"

namespace latentic {

Vec sample_rademacher(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_rademacher: n must be >= 1");
  Vec v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.rademacher();
  return v;
}

double isotropic_gaussian_logpdf(const Vec& z, double sigma) {
  if (z.empty()) throw std::invalid_argument("isotropic_gaussian_logpdf: empty vector");
  if (!(sigma > 0.0)) throw std::invalid_argument("isotropic_gaussian_logpdf: sigma must be > 0");
  const double d = static_cast<double>(z.size());
  const double log_2pi = 1.8378770664093454835606594728112;
  return -0.5 * d * log_2pi - d * std::log(sigma) - dot(z, z) / (2.0 * sigma * sigma);
}

Vec average_ranks(const Vec& xs) {
  const size_t n = xs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  Vec ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    // ties share the average of the ranks they occupy (1-based)
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(const Vec& a, const Vec& b) {
  const size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0)
    throw UndefinedCorrelation("spearman_rho: zero rank variance");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman_rho(const Vec& xs, const Vec& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("spearman_rho: length mismatch");
  if (xs.size() < 3) throw std::invalid_argument("spearman_rho: need at least 3 points");
  return pearson(average_ranks(xs), average_ranks(ys));
}

double spearman_permutation_pvalue(const Vec& xs, const Vec& ys, int n_shuffles, Rng& rng) {
  if (n_shuffles < 1) throw std::invalid_argument("spearman_permutation_pvalue: n_shuffles >= 1");
  const Vec rx = average_ranks(xs);
  Vec ry = average_ranks(ys);
  const double observed = std::abs(pearson(rx, ry));
  int hits = 0;
  for (int s = 0; s < n_shuffles; ++s) {
    for (size_t i = ry.size(); i > 1; --i)
      std::swap(ry[i - 1], ry[rng.below(i)]);
    if (std::abs(pearson(rx, ry)) >= observed) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(n_shuffles + 1);
}

ErrorStats error_stats(const Vec& estimates, const Vec& references) {
  if (estimates.empty() || estimates.size() != references.size())
    throw std::invalid_argument("error_stats: need equal nonempty lengths");
  double abs_ref = 0.0, abs_err = 0.0, err = 0.0;
  for (size_t i = 0; i < estimates.size(); ++i) {
    abs_ref += std::abs(references[i]);
    abs_err += std::abs(estimates[i] - references[i]);
    err += estimates[i] - references[i];
  }
  if (abs_ref <= 0.0)
    throw std::invalid_argument("error_stats: references have zero mean absolute value");
  return ErrorStats{abs_err / abs_ref, err / abs_ref};
}

}  // namespace latentic

#ifndef LATENTIC_STATS_HPP
#define LATENTIC_STATS_HPP

#include "latentic/rng.hpp"
#include "latentic/vecmath.hpp"

namespace latentic {

// Normalized error summary against a reference series. mae_normalized is the
// mean absolute error and me_normalized the signed mean error, both divided
// by the mean absolute value of the references.
struct ErrorStats {
  double mae_normalized = 0.0;
  double me_normalized = 0.0;
};

// n independent draws from {-1, +1}.
Vec sample_rademacher(int n, Rng& rng);

// log N(z; 0, sigma^2 I) in nats.
double isotropic_gaussian_logpdf(const Vec& z, double sigma);

// Average ranks (mid-rank for ties), 1-based.
Vec average_ranks(const Vec& xs);

// Spearman rank correlation with mid-rank tie handling.
// Throws UndefinedCorrelation when either rank series has zero variance.
double spearman_rho(const Vec& xs, const Vec& ys);

// Two-sided permutation p-value for spearman_rho(xs, ys) under shuffles of ys.
double spearman_permutation_pvalue(const Vec& xs, const Vec& ys, int n_shuffles, Rng& rng);

ErrorStats error_stats(const Vec& estimates, const Vec& references);

}  // namespace latentic

#endif

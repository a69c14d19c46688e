#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "latentic/errors.hpp"
#include "latentic/rng.hpp"
#include "latentic/stats.hpp"

using namespace latentic;

TEST_CASE("rademacher support and determinism") {
  Rng rng(7, 3);
  Vec v = sample_rademacher(4, rng);
  for (double x : v) CHECK((x == 1.0 || x == -1.0));

  Rng a(123, 5), b(123, 5);
  Vec va = sample_rademacher(64, a);
  Vec vb = sample_rademacher(64, b);
  CHECK(va == vb);

  Rng c(123, 6);
  Vec vc = sample_rademacher(64, c);
  CHECK(va != vc);

  CHECK_THROWS_AS(sample_rademacher(0, rng), std::invalid_argument);
}

TEST_CASE("rademacher empirical mean within 3/sqrt(N)") {
  const int n = 10000;
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  for (uint64_t seed : {1ull, 42ull, 9999ull, 77777ull}) {
    Rng rng(seed, 0);
    Vec v = sample_rademacher(n, rng);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    CHECK(std::abs(mean) <= bound);
  }
}

TEST_CASE("isotropic gaussian logpdf closed forms") {
  const double log_2pi = std::log(2.0 * 3.14159265358979323846);
  CHECK(isotropic_gaussian_logpdf({0.0, 0.0}, 1.0) == doctest::Approx(-log_2pi).epsilon(1e-12));

  // ||z||^2 = 2 in d=2
  CHECK(isotropic_gaussian_logpdf({1.0, 1.0}, 1.0) ==
        doctest::Approx(-1.0 - log_2pi).epsilon(1e-12));

  CHECK(isotropic_gaussian_logpdf({0.0}, 80.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * 3.14159265358979323846 * 6400.0)).epsilon(1e-12));
  CHECK(isotropic_gaussian_logpdf({0.0}, 80.0) == doctest::Approx(-5.0754).epsilon(1e-4));

  CHECK_THROWS_AS(isotropic_gaussian_logpdf({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(isotropic_gaussian_logpdf({1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("gaussian logpdf integrates to one (d=1 quadrature)") {
  // midpoint rule over [-6, 6] sigma = 1
  const int n = 20000;
  const double lo = -6.0, hi = 6.0;
  const double h = (hi - lo) / n;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * h;
    integral += std::exp(isotropic_gaussian_logpdf({x}, 1.0)) * h;
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("spearman rho basics") {
  CHECK(spearman_rho({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  // hand evaluation: ranks (1,2,3) vs (1,3,2) -> rho = 1 - 6*2/(3*8) = 0.5
  CHECK(spearman_rho({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5));

  CHECK_THROWS_AS(spearman_rho({1, 2}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(spearman_rho({1, 2, 3}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(spearman_rho({1, 1, 1}, {1, 2, 3}), UndefinedCorrelation);
}

TEST_CASE("spearman invariant under strictly increasing transforms") {
  Rng rng(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec xs, ys;
    for (int i = 0; i < 25; ++i) {
      xs.push_back(rng.normal());
      ys.push_back(rng.normal());
    }
    const double base = spearman_rho(xs, ys);
    Vec xt = xs, yt = ys;
    for (auto& v : xt) v = std::exp(2.0 * v) + 1.0;
    for (auto& v : yt) v = std::atan(v) * 7.0;
    CHECK(spearman_rho(xt, yt) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("spearman handles ties with average ranks") {
  // xs has a tie; mid-ranks (1.5, 1.5, 3)
  Vec r = average_ranks({5.0, 5.0, 9.0});
  CHECK(r[0] == doctest::Approx(1.5));
  CHECK(r[1] == doctest::Approx(1.5));
  CHECK(r[2] == doctest::Approx(3.0));
}

TEST_CASE("error stats") {
  auto zero = error_stats({1.0, 2.0}, {1.0, 2.0});
  CHECK(zero.mae_normalized == doctest::Approx(0.0));
  CHECK(zero.me_normalized == doctest::Approx(0.0));

  auto biased = error_stats({1.5, 2.5}, {1.0, 2.0});
  CHECK(biased.me_normalized > 0.0);
  CHECK(biased.mae_normalized == doctest::Approx(biased.me_normalized));

  auto mixed = error_stats({1.1, 0.9}, {1.0, 1.0});
  CHECK(mixed.mae_normalized == doctest::Approx(0.1));
  CHECK(mixed.me_normalized == doctest::Approx(0.0));

  CHECK_THROWS_AS(error_stats({1.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(error_stats({}, {}), std::invalid_argument);
}

TEST_CASE("|me| <= mae always") {
  Rng rng(3, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Vec est, ref;
    for (int i = 0; i < 17; ++i) {
      est.push_back(rng.normal() * 3.0);
      ref.push_back(rng.normal() + 2.0);
    }
    auto s = error_stats(est, ref);
    CHECK(std::abs(s.me_normalized) <= s.mae_normalized + 1e-15);
    CHECK(s.mae_normalized >= 0.0);
  }
}

TEST_CASE("permutation p-value sanity") {
  Rng rng(5, 0);
  Vec xs, ys;
  for (int i = 0; i < 40; ++i) {
    double v = rng.normal();
    xs.push_back(v);
    ys.push_back(v + 0.1 * rng.normal());  // strongly correlated
  }
  Rng prng(5, 1);
  CHECK(spearman_permutation_pvalue(xs, ys, 2000, prng) < 0.01);

  Vec zs;
  for (int i = 0; i < 40; ++i) zs.push_back(rng.normal());  // independent
  Rng prng2(5, 2);
  CHECK(spearman_permutation_pvalue(xs, zs, 2000, prng2) > 0.05);
}

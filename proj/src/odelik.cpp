#include "latentic/odelik.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latentic/errors.hpp"
#include "latentic/stats.hpp"

namespace latentic {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,      0.0,        500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784,  11.0 / 84,  0.0};
constexpr double kB4[7] = {5179.0 / 57600,  0.0,         7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

double error_norm(const Vec& e, const Vec& y0, const Vec& y1, double atol, double rtol) {
  double acc = 0.0;
  for (size_t i = 0; i < e.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = e[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(e.size()));
}

double rms_scaled(const Vec& v, const Vec& scale) {
  double acc = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const double r = v[i] / scale[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Standard automatic initial-step heuristic.
double initial_step(const OdeRhs& rhs, const Vec& y0, const Vec& f0, double t0,
                    double direction, double span, double atol, double rtol) {
  Vec sc(y0.size());
  for (size_t i = 0; i < y0.size(); ++i) sc[i] = atol + rtol * std::abs(y0[i]);
  const double d0 = rms_scaled(y0, sc);
  const double d1 = rms_scaled(f0, sc);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  Vec y1(y0.size());
  for (size_t i = 0; i < y0.size(); ++i) y1[i] = y0[i] + direction * h0 * f0[i];
  Vec f1 = rhs(t0 + direction * h0, y1);
  Vec df(y0.size());
  for (size_t i = 0; i < y0.size(); ++i) df[i] = f1[i] - f0[i];
  const double d2 = rms_scaled(df, sc) / h0;
  double h1;
  if (std::max(d1, d2) <= 1e-15)
    h1 = std::max(1e-6, h0 * 1e-3);
  else
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

Rk45Result rk45_integrate(const OdeRhs& rhs, Vec y0, double t0, double t1,
                          const SolverConfig& cfg) {
  if (t0 == t1) throw std::invalid_argument("rk45_integrate: empty interval");
  const size_t n = y0.size();
  const double direction = (t1 > t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  SolveStats stats;
  Vec k[7];
  for (auto& v : k) v.assign(n, 0.0);

  k[0] = rhs(t0, y0);
  ++stats.rhs_evals;
  if (!all_finite(k[0])) throw NumericalBlowup("rk45_integrate: non-finite rhs at start");

  double h = initial_step(rhs, y0, k[0], t0, direction, span, cfg.atol, cfg.rtol);
  ++stats.rhs_evals;

  // PI controller constants (order 5)
  const double beta = 0.04;
  const double expo = 0.2 - 0.75 * beta;
  const double safety = 0.9;
  double err_old = 1e-4;

  double t = t0;
  Vec y = std::move(y0);
  Vec ytmp(n), y_new(n), err(n);
  bool last_rejected = false;

  while (direction * (t1 - t) > 0.0) {
    if (stats.accepted + stats.rejected >= cfg.max_steps)
      throw SolverNoConvergence("rk45_integrate: maximum step count exceeded");
    const double remaining = std::abs(t1 - t);
    h = std::min(h, remaining);
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw SolverNoConvergence("rk45_integrate: step size underflow");

    const double hs = direction * h;
    for (int s = 1; s < 7; ++s) {
      for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += kA[s][j] * k[j][i];
        ytmp[i] = y[i] + hs * acc;
      }
      k[s] = rhs(t + kC[s] * hs, ytmp);
      ++stats.rhs_evals;
      if (!all_finite(k[s])) throw NumericalBlowup("rk45_integrate: non-finite rhs");
    }
    for (size_t i = 0; i < n; ++i) {
      double a5 = 0.0, a4 = 0.0;
      for (int s = 0; s < 7; ++s) {
        a5 += kB5[s] * k[s][i];
        a4 += kB4[s] * k[s][i];
      }
      y_new[i] = y[i] + hs * a5;
      err[i] = hs * (a5 - a4);
    }
    if (!all_finite(y_new)) throw NumericalBlowup("rk45_integrate: non-finite state");

    const double e = error_norm(err, y, y_new, cfg.atol, cfg.rtol);
    if (e <= 1.0) {
      t += hs;
      y = y_new;
      k[0] = k[6];  // FSAL
      ++stats.accepted;
      const double e_safe = std::max(e, 1e-10);
      double fac = safety * std::pow(e_safe, -expo) * std::pow(err_old, beta);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
      h *= fac;
      err_old = e_safe;
      last_rejected = false;
    } else {
      ++stats.rejected;
      const double fac = std::max(0.2, safety * std::pow(e, -expo));
      h *= fac;
      last_rejected = true;
    }
  }
  return Rk45Result{std::move(y), stats};
}

double divergence_exact(const OdeField& field, const Vec& z, double t) {
  const int d = field.dim();
  double tr = 0.0;
  Vec e(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    e[i] = 1.0;
    Vec row = field.vjp(z, t, e);
    tr += row[i];
    e[i] = 0.0;
  }
  if (!std::isfinite(tr)) throw NumericalBlowup("divergence_exact: non-finite trace");
  return tr;
}

double divergence_hutchinson(const OdeField& field, const Vec& z, double t,
                             std::span<const Vec> probes) {
  if (probes.empty()) throw std::invalid_argument("divergence_hutchinson: need n_r >= 1 probes");
  double acc = 0.0;
  for (const Vec& v : probes) acc += dot(v, field.vjp(z, t, v));
  const double est = acc / static_cast<double>(probes.size());
  if (!std::isfinite(est)) throw NumericalBlowup("divergence_hutchinson: non-finite estimate");
  return est;
}

std::vector<Vec> make_probes(int n_r, int dim, Rng& rng) {
  if (n_r < 1) throw std::invalid_argument("make_probes: n_r must be >= 1");
  std::vector<Vec> probes;
  probes.reserve(static_cast<size_t>(n_r));
  for (int i = 0; i < n_r; ++i) probes.push_back(sample_rademacher(dim, rng));
  return probes;
}

double log_likelihood_augmented(const OdeField& field, const Vec& z_t, double t,
                                double t_end, double prior_sigma, const SolverConfig& cfg,
                                Rng rng, SolveStats* stats) {
  const int d = field.dim();
  if (static_cast<int>(z_t.size()) != d)
    throw std::invalid_argument("log_likelihood_augmented: dimension mismatch");

  std::vector<Vec> probes;
  if (cfg.mode == DivergenceMode::Hutchinson) probes = make_probes(cfg.n_r, d, rng);

  // Augmented dynamics: the z block follows the field, the last component
  // accumulates the Jacobian trace so that adding the prior log-density at
  // t_end recovers the level-t log-density.
  OdeRhs rhs = [&](double time, const Vec& y) {
    Vec z(y.begin(), y.begin() + d);
    Vec f = field.eval(z, time);
    double div = (cfg.mode == DivergenceMode::Exact)
                     ? divergence_exact(field, z, time)
                     : divergence_hutchinson(field, z, time, probes);
    Vec dy(static_cast<size_t>(d) + 1);
    std::copy(f.begin(), f.end(), dy.begin());
    dy[static_cast<size_t>(d)] = div;
    return dy;
  };

  Vec y0(static_cast<size_t>(d) + 1, 0.0);
  std::copy(z_t.begin(), z_t.end(), y0.begin());

  Rk45Result res = rk45_integrate(rhs, std::move(y0), t, t_end, cfg);
  if (stats) *stats = res.stats;

  Vec z_end(res.y.begin(), res.y.begin() + d);
  const double delta_logp = res.y[static_cast<size_t>(d)];
  return isotropic_gaussian_logpdf(z_end, prior_sigma) + delta_logp;
}

}  // namespace latentic

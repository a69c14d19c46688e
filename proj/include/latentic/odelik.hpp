#ifndef LATENTIC_ODELIK_HPP
#define LATENTIC_ODELIK_HPP

#include <functional>
#include <span>
#include <vector>

#include "latentic/rng.hpp"
#include "latentic/vecmath.hpp"

namespace latentic {

// Frame state plus the accumulated log-density change, integrated jointly.
struct AugmentedState {
  Vec z;
  double delta_logp = 0.0;
};

enum class DivergenceMode { Exact, Hutchinson };

struct SolverConfig {
  double atol = 1e-3;
  double rtol = 1e-3;
  int max_steps = 100000;
  DivergenceMode mode = DivergenceMode::Hutchinson;
  int n_r = 4;

  static SolverConfig with_tol(double tol) {
    SolverConfig c;
    c.atol = c.rtol = tol;
    return c;
  }
};

struct SolveStats {
  int accepted = 0;
  int rejected = 0;
  int rhs_evals = 0;
};

// A vector field with a reverse-mode product against its input Jacobian.
class OdeField {
 public:
  virtual ~OdeField() = default;
  virtual int dim() const = 0;
  virtual Vec eval(const Vec& z, double t) const = 0;
  // cot^T * (d eval / d z)
  virtual Vec vjp(const Vec& z, double t, const Vec& cot) const = 0;
};

using OdeRhs = std::function<Vec(double t, const Vec& y)>;

struct Rk45Result {
  Vec y;
  SolveStats stats;
};

// Dormand-Prince 5(4) with a PI step controller. Component-wise error control
// with scale atol + rtol*max(|y0|,|y1|). Throws SolverNoConvergence when the
// step budget runs out and NumericalBlowup on non-finite values.
Rk45Result rk45_integrate(const OdeRhs& rhs, Vec y0, double t0, double t1,
                          const SolverConfig& cfg);

// Exact Jacobian trace via one VJP per basis cotangent.
double divergence_exact(const OdeField& field, const Vec& z, double t);

// Skilling-Hutchinson estimate over the given probes (mean of v^T J v).
double divergence_hutchinson(const OdeField& field, const Vec& z, double t,
                             std::span<const Vec> probes);

std::vector<Vec> make_probes(int n_r, int dim, Rng& rng);

// Integrates (z, delta_logp) from t to t_end along the field and returns
// prior log-density at z(t_end) plus the accumulated change: the log-density
// of the level-t marginal at z_t. Probes are drawn once per call and held
// fixed across solver steps.
double log_likelihood_augmented(const OdeField& field, const Vec& z_t, double t,
                                double t_end, double prior_sigma, const SolverConfig& cfg,
                                Rng rng, SolveStats* stats = nullptr);

}  // namespace latentic

#endif

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rkpca/kernel.hpp"
#include "rkpca/linalg.hpp"
#include "rkpca/objective.hpp"
#include "rkpca/types.hpp"

namespace rkpca {

enum class SolverKind { AdmmBtls, PlmAdss, RpcaAlm };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::AdmmBtls: return "admm-btls";
    case SolverKind::PlmAdss: return "plm-adss";
    case SolverKind::RpcaAlm: return "rpca-alm";
  }
  return "?";
}

/// Knobs shared by both nonconvex solvers. When `lambda` is unset it is
/// resolved as n * lambda0 / ||M||_1; `eps` defaults to 1e-6 for ADMM and
/// 1e-4 for the proximal solver.
struct SolverConfig {
  double lambda0 = 0.5;
  double mu_factor = 10;    ///< ADMM penalty mu = mu_factor * lambda
  double eta0_factor = 10;  ///< initial step eta0 = eta0_factor / L_J
  double btls_c = 0.5;      ///< step shrink factor per backtrack
  double btls_gamma = 0.1;  ///< sufficient-decrease slope
  double omega0 = 0.1;      ///< initial step-size scale of the proximal solver
  double omega_c = 2;       ///< growth applied to omega when the objective rises
  std::optional<double> eps;
  int t_max = 300;
  std::optional<double> lambda;  ///< explicit lambda, bypasses the heuristic
};

inline void validate(const SolverConfig& cfg) {
  require(cfg.lambda0 > 0, "SolverConfig: lambda0 must be > 0");
  require(cfg.mu_factor > 0, "SolverConfig: mu_factor must be > 0");
  require(cfg.eta0_factor > 0, "SolverConfig: eta0_factor must be > 0");
  require(cfg.btls_c > 0 && cfg.btls_c < 1, "SolverConfig: btls_c must lie in (0, 1)");
  require(cfg.btls_gamma > 0 && cfg.btls_gamma < 1,
          "SolverConfig: btls_gamma must lie in (0, 1)");
  require(cfg.omega0 > 0, "SolverConfig: omega0 must be > 0");
  require(cfg.omega_c > 1, "SolverConfig: omega_c must be > 1");
  require(!cfg.eps || *cfg.eps > 0, "SolverConfig: eps must be > 0");
  require(cfg.t_max >= 1, "SolverConfig: t_max must be >= 1");
  require(!cfg.lambda || *cfg.lambda > 0, "SolverConfig: lambda must be > 0");
}

/// Output of a decomposition M ~ X + E.
template <class Scalar>
struct DecompositionResult {
  Mat<Scalar> x;  ///< recovered clean component
  Mat<Scalar> e;  ///< sparse noise component
  std::vector<Scalar> objective_trace;  ///< per-iteration objective (entry 0 = initial)
  int iterations = 0;
  bool converged = false;
  SolverKind solver = SolverKind::PlmAdss;
  Scalar constraint_residual = 0;  ///< ||X + E - M||_F / ||M||_F (0 for PLM by construction)
  Scalar lambda = 0;               ///< resolved lambda, echoed for auditability
  Scalar sigma = 0;                ///< bandwidth used
  std::vector<int> omega_increases;  ///< PLM iterations where omega grew
};

/// Elementwise soft thresholding u -> sign(u) * max(|u| - tau, 0).
template <class Derived, class Scalar = typename Derived::Scalar>
Mat<Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& u, Scalar tau) {
  require(tau >= 0, "soft_threshold: tau must be >= 0");
  return (u.derived().array().sign() * (u.derived().array().abs() - tau).max(Scalar(0)))
      .matrix();
}

/// lambda = n * lambda0 / ||M||_1 (entrywise L1 norm).
template <class Scalar>
Scalar lambda_heuristic(const Mat<Scalar>& m, Scalar lambda0) {
  require_data_matrix(m, "lambda_heuristic");
  const Scalar l1 = m.template lpNorm<1>();
  if (l1 == Scalar(0)) throw InvalidInput("lambda_heuristic: M is all-zero");
  return Scalar(m.cols()) * lambda0 / l1;
}

/// Step-size bound || (2/sigma^2) (H - rho I) + mu I ||_2 where rho is the
/// mean of all entries of B H. Pass mu = 0 for the proximal solver's form.
template <class Scalar>
Scalar lipschitz_estimate(const GradContext<Scalar>& ctx, Scalar sigma, Scalar mu) {
  require(sigma > 0, "lipschitz_estimate: sigma must be > 0");
  require(mu >= 0, "lipschitz_estimate: mu must be >= 0");
  Mat<Scalar> a = (Scalar(2) / (sigma * sigma)) *
                  (ctx.grad_weight -
                   ctx.grad_weight_mean *
                       Mat<Scalar>::Identity(ctx.grad_weight.rows(), ctx.grad_weight.cols()));
  a.diagonal().array() += mu;
  return detail::sym_spectral_norm(a);
}

namespace detail {

constexpr int kBtlsMaxHalvings = 40;

template <class Scalar>
Scalar resolve_lambda(const Mat<Scalar>& m, const SolverConfig& cfg) {
  return cfg.lambda ? Scalar(*cfg.lambda) : lambda_heuristic(m, Scalar(cfg.lambda0));
}

}  // namespace detail

/// ADMM on tr(K^{p/2}) + lambda ||E||_1 s.t. X + E = M. The X update is a
/// single gradient step on the smooth part of the augmented Lagrangian with
/// the step found by backtracking (Armijo sufficient decrease); the E update
/// is exact soft thresholding; the multipliers ascend with fixed penalty
/// mu = mu_factor * lambda. Stops once the relative decrease of the
/// Lagrangian (evaluated after the multiplier update) falls below eps.
template <class Scalar>
DecompositionResult<Scalar> solve_admm_btls(const Mat<Scalar>& m, const KernelSpec& spec,
                                            const SolverConfig& cfg) {
  require_data_matrix(m, "solve_admm_btls");
  validate(spec);
  validate(cfg);
  require(spec.family == KernelFamily::Rbf, "solve_admm_btls: RBF kernel required");

  const Scalar sigma = Scalar(spec.sigma);
  const Scalar lambda = detail::resolve_lambda(m, cfg);
  const Scalar mu = Scalar(cfg.mu_factor) * lambda;
  const Scalar eps = Scalar(cfg.eps.value_or(1e-6));
  const Scalar gamma = Scalar(cfg.btls_gamma);
  const Scalar mnorm = m.norm();

  DecompositionResult<Scalar> res;
  res.solver = SolverKind::AdmmBtls;
  res.lambda = lambda;
  res.sigma = sigma;

  Mat<Scalar> x = m;
  Mat<Scalar> e = Mat<Scalar>::Zero(m.rows(), m.cols());
  Mat<Scalar> q = Mat<Scalar>::Zero(m.rows(), m.cols());

  GradContext<Scalar> ctx = grad_context(x, spec);
  Scalar lagr = ctx.trace_p;  // E = Q = 0 initially
  res.objective_trace.push_back(lagr);

  for (int t = 0; t < cfg.t_max; ++t) {
    // X step: one Armijo-backtracked gradient step on
    // J(X) = tr(K^{p/2}) + (mu/2) ||X + E - M + Q/mu||_F^2.
    const Mat<Scalar> shift = e - m + q / mu;
    const Mat<Scalar> grad =
        detail::trace_grad_from_context(x, ctx, sigma) + mu * (x + shift);
    const Scalar jx = ctx.trace_p + (mu / 2) * (x + shift).squaredNorm();
    const Scalar grad_sq = grad.squaredNorm();
    Scalar eta = Scalar(cfg.eta0_factor) / lipschitz_estimate(ctx, sigma, mu);

    Mat<Scalar> x_next;
    int halvings = 0;
    for (;;) {
      x_next = x - eta * grad;
      const Scalar j_cand = detail::kernel_trace_power(x_next, spec) +
                            (mu / 2) * (x_next + shift).squaredNorm();
      if (j_cand <= jx - gamma * eta * grad_sq) break;
      eta *= Scalar(cfg.btls_c);
      if (++halvings > detail::kBtlsMaxHalvings)
        throw StepSearchFailure(
            "solve_admm_btls: backtracking exhausted " +
            std::to_string(detail::kBtlsMaxHalvings) + " halvings at iteration " +
            std::to_string(t) + " (eta=" + std::to_string(double(eta)) + ")");
    }
    x = x_next;

    e = soft_threshold(m - x - q / mu, lambda / mu);
    const Mat<Scalar> r = x + e - m;
    q += mu * r;

    ctx = grad_context(x, spec);
    const Scalar lagr_next = ctx.trace_p + lambda * e.template lpNorm<1>() +
                             r.cwiseProduct(q).sum() + (mu / 2) * r.squaredNorm();
    if (!std::isfinite(lagr_next))
      throw NumericalFailure("solve_admm_btls: non-finite Lagrangian");
    res.objective_trace.push_back(lagr_next);
    res.iterations = t + 1;
    res.constraint_residual = mnorm > 0 ? r.norm() / mnorm : r.norm();

    // Stop once the Lagrangian has stopped decreasing. A transient increase
    // (dual ascent outweighing the primal steps) is not convergence.
    const Scalar rel_decrease = (lagr - lagr_next) / std::abs(lagr);
    lagr = lagr_next;
    if (rel_decrease >= 0 && rel_decrease < eps) {
      res.converged = true;
      break;
    }
  }

  res.x = std::move(x);
  res.e = std::move(e);
  return res;
}

/// Proximal linearized minimization over E alone (X = M - E throughout):
/// soft-threshold a gradient step with step size 1/nu where
/// nu = omega * ||(2/sigma^2)(H - rho I)||_2, growing omega whenever the
/// objective rises. Stops once ||E_t - E_{t-1}||_F / ||M||_F < eps.
template <class Scalar>
DecompositionResult<Scalar> solve_plm_adss(const Mat<Scalar>& m, const KernelSpec& spec,
                                           const SolverConfig& cfg) {
  require_data_matrix(m, "solve_plm_adss");
  validate(spec);
  validate(cfg);
  require(spec.family == KernelFamily::Rbf, "solve_plm_adss: RBF kernel required");

  const Scalar sigma = Scalar(spec.sigma);
  const Scalar lambda = detail::resolve_lambda(m, cfg);
  const Scalar eps = Scalar(cfg.eps.value_or(1e-4));
  const Scalar mnorm = m.norm();

  DecompositionResult<Scalar> res;
  res.solver = SolverKind::PlmAdss;
  res.lambda = lambda;
  res.sigma = sigma;

  Mat<Scalar> e = Mat<Scalar>::Zero(m.rows(), m.cols());
  Mat<Scalar> x = m;
  Scalar omega = Scalar(cfg.omega0);

  GradContext<Scalar> ctx = grad_context(x, spec);
  Scalar obj = ctx.trace_p;  // E = 0 initially
  res.objective_trace.push_back(obj);

  for (int t = 1; t <= cfg.t_max; ++t) {
    const Mat<Scalar> grad = -detail::trace_grad_from_context(x, ctx, sigma);
    const Scalar lip = lipschitz_estimate(ctx, sigma, Scalar(0));
    if (lip <= Scalar(0)) {
      // Degenerate context (e.g. a single sample): no descent direction.
      res.converged = true;
      break;
    }
    const Scalar nu = omega * lip;
    const Mat<Scalar> e_next = soft_threshold(e - grad / nu, lambda / nu);
    const Mat<Scalar> x_next = m - e_next;

    ctx = grad_context(x_next, spec);
    const Scalar obj_next = ctx.trace_p + lambda * e_next.template lpNorm<1>();
    if (!std::isfinite(obj_next))
      throw NumericalFailure("solve_plm_adss: non-finite objective");
    res.objective_trace.push_back(obj_next);
    res.iterations = t;
    if (obj_next > obj) {
      omega *= Scalar(cfg.omega_c);
      res.omega_increases.push_back(t);
    }

    const Scalar step = (e_next - e).norm();
    e = e_next;
    x = x_next;
    obj = obj_next;
    if (step / (mnorm > 0 ? mnorm : Scalar(1)) < eps) {
      res.converged = true;
      break;
    }
  }

  res.x = std::move(x);
  res.e = std::move(e);
  return res;
}

}  // namespace rkpca

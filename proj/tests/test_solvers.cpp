#include "rkpca/solvers.hpp"

#include <cmath>

#include "doctest.h"
#include "test_helpers.hpp"

using rkpca::KernelSpec;
using rkpca::Matd;
using rkpca::SolverConfig;

namespace {

// Small nonlinear low-latent-dimension data plus sparse Gaussian noise,
// enough to exercise the solvers without the full benchmark harness.
struct SmallInstance {
  Matd clean;
  Matd noisy;
};

SmallInstance small_instance(int d, int n, double density, std::uint64_t seed) {
  rkpca::Rng rng(seed);
  const int r = 2;
  Matd p1(d, r), p2(d, r), p3(d, r);
  for (auto* p : {&p1, &p2, &p3})
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < d; ++i) (*p)(i, j) = rng.normal();
  Matd z(r, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < r; ++i) z(i, j) = rng.uniform(-1.0, 1.0);
  SmallInstance inst;
  inst.clean = p1 * z + 0.5 * (p2 * z.array().square().matrix() +
                               p3 * z.array().cube().matrix());
  inst.noisy = inst.clean;
  const int hits = static_cast<int>(density * d * n);
  for (int h = 0; h < hits; ++h) {
    const auto idx = rng.below(static_cast<std::uint64_t>(d) * n);
    inst.noisy(idx % d, idx / d) += rng.normal();
  }
  return inst;
}

KernelSpec rbf_for(const Matd& m) {
  KernelSpec spec;
  spec.sigma = rkpca::bandwidth_heuristic(m, 1.0);
  return spec;
}

}  // namespace

TEST_CASE("soft_threshold: fixed points of the shrinkage map") {
  Matd u(1, 4);
  u << 0.7, -0.3, 0.0, 1.2;
  const Matd t = rkpca::soft_threshold(u, 0.5);
  CHECK(t(0, 0) == doctest::Approx(0.2));
  CHECK(t(0, 1) == 0.0);
  CHECK(t(0, 2) == 0.0);
  CHECK(t(0, 3) == doctest::Approx(0.7));

  const Matd v = testutil::gaussian(3, 4, 1);
  CHECK((rkpca::soft_threshold(v, 0.0) - v).norm() == 0.0);
  CHECK_THROWS_AS((void)rkpca::soft_threshold(v, -0.1), rkpca::InvalidInput);
}

TEST_CASE("soft_threshold: non-expansive on random pairs") {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Matd a = testutil::gaussian(4, 5, 300 + s);
    const Matd b = testutil::gaussian(4, 5, 400 + s);
    const double tau = 0.1 + 0.2 * s;
    CHECK((rkpca::soft_threshold(a, tau) - rkpca::soft_threshold(b, tau)).norm() <=
          (a - b).norm() + 1e-12);
  }
}

TEST_CASE("soft_threshold: solves its prox problem") {
  rkpca::Rng rng(77);
  const Matd v = testutil::gaussian(4, 6, 78);
  const double tau = 0.4;
  const Matd star = rkpca::soft_threshold(v, tau);
  const auto prox_obj = [&](const Matd& e) {
    return 0.5 * (e - v).squaredNorm() + tau * e.lpNorm<1>();
  };
  const double best = prox_obj(star);
  for (int k = 0; k < 1000; ++k) {
    Matd perturbed = star;
    for (Eigen::Index j = 0; j < perturbed.size(); ++j)
      perturbed(j) += 0.05 * (2.0 * rng.uniform01() - 1.0);
    CHECK(prox_obj(perturbed) >= best - 1e-12);
  }
}

TEST_CASE("lambda_heuristic: closed forms and the summation oracle") {
  const Matd ones = Matd::Ones(4, 6);
  CHECK(rkpca::lambda_heuristic(ones, 0.5) == doctest::Approx(0.5 / 4.0));
  CHECK(rkpca::lambda_heuristic(ones, 1.0) ==
        doctest::Approx(2.0 * rkpca::lambda_heuristic(ones, 0.5)));

  const auto inst = small_instance(20, 100, 0.0, 5);
  double sum = 0;
  for (Eigen::Index j = 0; j < inst.clean.size(); ++j) sum += std::abs(inst.clean(j));
  CHECK(rkpca::lambda_heuristic(inst.clean, 0.5) ==
        doctest::Approx(100.0 * 0.5 / sum).epsilon(1e-12));

  CHECK_THROWS_AS((void)rkpca::lambda_heuristic(Matd(Matd::Zero(3, 3)), 0.5),
                  rkpca::InvalidInput);
}

TEST_CASE("lipschitz_estimate: hand case, large mu limit, power iteration") {
  // H = diag(1, 0), sigma = 1, mu = 0: rho = 1/2 and the matrix is
  // 2 (H - I/2) = diag(1, -1), so the estimate is 1.
  rkpca::GradContext<double> ctx;
  ctx.kernel = Matd::Identity(2, 2);
  ctx.grad_weight = Matd::Zero(2, 2);
  ctx.grad_weight(0, 0) = 1.0;
  ctx.grad_weight_mean = ctx.grad_weight.sum() / 2.0;
  CHECK(rkpca::lipschitz_estimate(ctx, 1.0, 0.0) == doctest::Approx(1.0));

  const double big = 1e6;
  CHECK(rkpca::lipschitz_estimate(ctx, 1.0, big) == doctest::Approx(big).epsilon(1e-5));

  const Matd x = testutil::gaussian(4, 8, 91);
  const auto spec = rbf_for(x);
  const auto kctx = rkpca::grad_context(x, spec);
  Matd a = (2.0 / (spec.sigma * spec.sigma)) *
           (kctx.grad_weight - kctx.grad_weight_mean * Matd::Identity(8, 8));
  a.diagonal().array() += 0.3;
  CHECK(rkpca::lipschitz_estimate(kctx, spec.sigma, 0.3) ==
        doctest::Approx(testutil::power_iteration_norm(a, 92)).epsilon(1e-6));
}

TEST_CASE("solve_admm_btls: huge lambda forces E to zero") {
  const auto inst = small_instance(10, 40, 0.0, 11);
  SolverConfig cfg;
  cfg.lambda0 = 10.0;
  const auto res = rkpca::solve_admm_btls(inst.noisy, rbf_for(inst.noisy), cfg);
  CHECK(res.e.lpNorm<1>() / inst.noisy.lpNorm<1>() < 1e-3);
  CHECK((res.x - inst.noisy).norm() / inst.noisy.norm() < 0.05);
}

TEST_CASE("solve_admm_btls: Lagrangian trace is non-increasing") {
  const auto inst = small_instance(10, 40, 0.3, 12);
  const auto res = rkpca::solve_admm_btls(inst.noisy, rbf_for(inst.noisy), SolverConfig{});
  REQUIRE(res.objective_trace.size() >= 2);
  for (std::size_t t = 1; t < res.objective_trace.size(); ++t)
    CHECK(res.objective_trace[t] <=
          res.objective_trace[t - 1] + 1e-10 * std::abs(res.objective_trace[t - 1]));
  CHECK(res.converged);
  CHECK(res.constraint_residual <= 1e-3);
}

TEST_CASE("solve_admm_btls: backtracking cap raises StepSearchFailure") {
  const auto inst = small_instance(8, 20, 0.2, 13);
  SolverConfig cfg;
  cfg.eta0_factor = 1e30;  // unsatisfiable within 40 halvings
  CHECK_THROWS_AS(
      (void)rkpca::solve_admm_btls(inst.noisy, rbf_for(inst.noisy), cfg),
      rkpca::StepSearchFailure);
}

TEST_CASE("solve_plm_adss: huge lambda keeps E at zero and converges instantly") {
  const auto inst = small_instance(10, 40, 0.0, 14);
  SolverConfig cfg;
  cfg.lambda0 = 100.0;
  const auto res = rkpca::solve_plm_adss(inst.noisy, rbf_for(inst.noisy), cfg);
  CHECK(res.e.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((res.x - inst.noisy).norm() == 0.0);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
}

TEST_CASE("solve_plm_adss: objective tail is non-increasing after the last omega bump") {
  const auto inst = small_instance(10, 40, 0.3, 15);
  const auto res = rkpca::solve_plm_adss(inst.noisy, rbf_for(inst.noisy), SolverConfig{});
  const int tail_start =
      res.omega_increases.empty() ? 1 : res.omega_increases.back() + 1;
  for (std::size_t t = tail_start; t < res.objective_trace.size(); ++t)
    CHECK(res.objective_trace[t] <= res.objective_trace[t - 1]);
  CHECK(res.converged);
  // X + E = M holds exactly: E is the only variable.
  CHECK((res.x + res.e - inst.noisy).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("solvers: recovery beats the noisy baseline on a small instance") {
  const auto inst = small_instance(10, 50, 0.2, 16);
  const double noisy_err = (inst.noisy - inst.clean).norm() / inst.clean.norm();
  const auto spec = rbf_for(inst.noisy);
  const auto plm = rkpca::solve_plm_adss(inst.noisy, spec, SolverConfig{});
  const auto admm = rkpca::solve_admm_btls(inst.noisy, spec, SolverConfig{});
  CHECK((plm.x - inst.clean).norm() / inst.clean.norm() < noisy_err);
  CHECK((admm.x - inst.clean).norm() / inst.clean.norm() < noisy_err);
}

TEST_CASE("solvers: bit-identical reruns") {
  const auto inst = small_instance(8, 30, 0.3, 17);
  const auto spec = rbf_for(inst.noisy);
  const auto a = rkpca::solve_plm_adss(inst.noisy, spec, SolverConfig{});
  const auto b = rkpca::solve_plm_adss(inst.noisy, spec, SolverConfig{});
  CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("SolverConfig validation") {
  const auto inst = small_instance(6, 12, 0.0, 18);
  const auto spec = rbf_for(inst.noisy);
  SolverConfig bad;
  bad.btls_gamma = 1.5;
  CHECK_THROWS_AS((void)rkpca::solve_admm_btls(inst.noisy, spec, bad),
                  rkpca::InvalidInput);
  bad = SolverConfig{};
  bad.omega_c = 0.5;
  CHECK_THROWS_AS((void)rkpca::solve_plm_adss(inst.noisy, spec, bad),
                  rkpca::InvalidInput);
  bad = SolverConfig{};
  bad.t_max = 0;
  CHECK_THROWS_AS((void)rkpca::solve_plm_adss(inst.noisy, spec, bad),
                  rkpca::InvalidInput);
}

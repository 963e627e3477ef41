#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "vrld/diagnostics.hpp"
#include "vrld/samplers.hpp"
#include "vrld/theory.hpp"

using namespace vrld;
using vrld::test::rel_close;

namespace {

Matrix random_spd(std::size_t d, std::mt19937_64& gen) {
  Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::normal_distribution<double> normal;
  for (auto& v : a.reshaped()) v = normal(gen);
  return a * a.transpose() + 0.5 * Matrix::Identity(a.rows(), a.cols());
}

// Textbook KL between Gaussians via explicit inverse and log-determinant.
double kl_reference(const GaussianMoments& p, const GaussianMoments& q) {
  const Matrix qi = q.cov.inverse();
  const Vector dm = q.mean - p.mean;
  return 0.5 * ((qi * p.cov).trace() + dm.dot(qi * dm) - static_cast<double>(p.dim()) +
                std::log(q.cov.determinant() / p.cov.determinant()));
}

const QuadraticFamily& family_of(const FiniteSumObjective& obj) {
  return dynamic_cast<const QuadraticFamily&>(obj.family());
}

}  // namespace

TEST_CASE("gaussian KL against the textbook formula") {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 30; ++t) {
    const std::size_t d = 1 + t % 4;
    GaussianMoments p{test::random_vector(d, gen), random_spd(d, gen)};
    GaussianMoments q{test::random_vector(d, gen), random_spd(d, gen)};
    CHECK(rel_close(kl_gaussians(p, q), kl_reference(p, q), 1e-10));
    CHECK(kl_gaussians(p, p) == doctest::Approx(0).epsilon(1e-12));
    CHECK(rel_close(kl_symmetric(p, q), kl_symmetric(q, p), 1e-12));
  }
  GaussianMoments a{Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 4.0)};
  GaussianMoments b{Vector::Constant(1, -1.0), Matrix::Constant(1, 1, 1.0)};
  CHECK(rel_close(kl_gaussians(a, b), std::log(0.5) + (4 + 4) / 2.0 - 0.5, 1e-14));
}

TEST_CASE("gaussian W2") {
  GaussianMoments a{Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 4.0)};
  GaussianMoments b{Vector::Constant(1, -1.0), Matrix::Constant(1, 1, 1.0)};
  CHECK(rel_close(w2_gaussians(a, b), std::sqrt(4.0 + 1.0), 1e-12));
  GaussianMoments c{Vector::Zero(2), Vector(Eigen::Vector2d(1, 9)).asDiagonal()};
  GaussianMoments e{Vector::Ones(2), Vector(Eigen::Vector2d(4, 1)).asDiagonal()};
  CHECK(rel_close(w2_gaussians(c, e), std::sqrt(2.0 + 1.0 + 4.0), 1e-12));
}

TEST_CASE("empirical W2 in one dimension") {
  const std::vector<double> xs{3, 1}, ys{1, 3};
  CHECK(w2_empirical_1d(xs, ys) == 0.0);
  const std::vector<double> one{0}, two{1, 3};
  CHECK(rel_close(w2_empirical_1d(one, two), std::sqrt(5.0), 1e-14));
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  std::vector<double> u(4000), v(3000);
  for (auto& x : u) x = normal(gen);
  for (auto& x : v) x = 2 + normal(gen);
  CHECK(std::abs(w2_empirical_1d(u, v) - 2.0) < 0.1);
}

TEST_CASE("lmc moment oracle follows its recursion") {
  const double eta = 0.1, gamma = 2;
  Vector m{{1.0, -2.0}};
  Matrix S = Matrix::Identity(2, 2) * 0.3;
  const Vector m0 = m;
  const Matrix S0 = S;
  for (std::size_t k = 1; k <= 50; ++k) {
    m *= 1 - eta;
    S = (1 - eta) * (1 - eta) * S + 2 * eta / gamma * Matrix::Identity(2, 2);
    if (k % 10 == 0) {
      const auto o = gaussian_moment_oracle_lmc(eta, gamma, k, m0, S0);
      CHECK((o.mean - m).norm() < 1e-13);
      CHECK((o.cov - S).norm() < 1e-13);
    }
  }
  const auto st = lmc_stationary_moments(eta, gamma, 3);
  CHECK(rel_close(st.cov(1, 1), 1 / (gamma * (1 - eta / 2)), 1e-14));
}

TEST_CASE("gibbs moments of a quadratic") {
  const auto obj = test::quadratic(8, 2, 3, 0.5);
  const auto& fam = family_of(obj);
  const auto g = gibbs_moments(fam, 4.0);
  CHECK((g.mean - *obj.regularity().x_star).norm() < 1e-13);
  const Vector h = fam.mean_curvature();
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(rel_close(g.cov(j, j), 1 / (4.0 * h[j]), 1e-13));
  CHECK(rel_close(quadratic_suboptimality(fam, g), 2.0 / (2 * 4.0), 1e-12));
}

TEST_CASE("svrg moment path reduces to lmc for full batches") {
  const auto obj = test::quadratic(6, 2, 5);
  const auto& fam = family_of(obj);
  const Vector xs = *obj.regularity().x_star;
  const Vector m0{{2.0, 1.0}};
  const Matrix S0 = Matrix::Identity(2, 2) * 0.2;
  const std::vector<std::size_t> steps{0, 5, 12};
  const auto path = svrg_moment_path(fam, 0.1, 2.0, 6, 3, steps, m0, S0);
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto o = gaussian_moment_oracle_lmc(0.1, 2.0, steps[j], m0 - xs, S0);
    CHECK((path[j].mean - xs - o.mean).norm() < 1e-12);
    CHECK((path[j].cov - o.cov).norm() < 1e-12);
  }
}

TEST_CASE("svrg moment path matches simulation with heterogeneous curvature") {
  const auto obj = test::quadratic(6, 1, 7, 0.8);
  const auto& fam = family_of(obj);
  const double eta = 0.2, gamma = 1;
  SamplerConfig c;
  c.variant = Variant::SVRG_LD;
  c.eta = eta;
  c.gamma = gamma;
  c.batch = 2;
  c.epoch_length = 3;
  c.steps = 21;
  c.seed = 5;
  c.checkpoints = {2, 21};
  InitLaw law{Vector::Constant(1, 3.0), 0.5};
  const std::size_t R = 40000;
  const auto traces = run_replicates(obj, c, law, R, 1);
  const auto path = svrg_moment_path(fam, eta, gamma, 2, 3, c.checkpoints, law.mean, Matrix::Constant(1, 1, 0.25));
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<double> xs(R);
    for (std::size_t r = 0; r < R; ++r) xs[r] = traces[r].iterates[j];
    const auto st = sample_stats(xs, 1);
    CHECK(std::abs(st.mean[0] - path[j].mean[0]) < 4 * st.mean_se[0]);
    CHECK(std::abs(st.cov(0, 0) - path[j].cov(0, 0)) < 4 * st.cov_se(0, 0));
  }
  const auto stat = svrg_stationary_moments(fam, eta, gamma, 2, 3);
  const auto lmc_like = svrg_stationary_moments(fam, eta, gamma, 6, 3);
  CHECK(stat.cov(0, 0) > lmc_like.cov(0, 0));
}

TEST_CASE("sample statistics") {
  const std::vector<double> rows{1, 2, 3, 6, 5, 10};
  const auto st = sample_stats(rows, 2);
  CHECK(st.count == 3);
  CHECK(st.mean[0] == 3.0);
  CHECK(st.mean[1] == 6.0);
  CHECK(st.cov(0, 0) == 4.0);
  CHECK(st.cov(1, 1) == 16.0);
  CHECK(st.cov(0, 1) == 8.0);
  CHECK(rel_close(st.mean_se[0], std::sqrt(4.0 / 3), 1e-15));
  CHECK_THROWS_AS(sample_stats(std::vector<double>{1, 2, 3}, 2), Error);
}

TEST_CASE("variance identity on exhaustive subsets") {
  const auto obj = test::quadratic(7, 2, 1, 0.5);
  std::mt19937_64 gen(8);
  for (std::size_t B = 1; B <= 7; ++B) {
    const auto r = svrg_variance_identity_check(obj, test::random_vector(2, gen), test::random_vector(2, gen), B);
    CHECK(r.gap <= 1e-12 * std::max(1.0, r.rhs));
  }
}

TEST_CASE("one-dimensional quadrature against closed forms") {
  const auto obj = test::quadratic(5, 1, 2);
  const auto& fam = family_of(obj);
  const double gamma = 3;
  const GaussianMoments rho{Vector::Constant(1, 1.5), Matrix::Constant(1, 1, 0.49)};
  const double exact = kl_gaussians(rho, gibbs_moments(fam, gamma));
  CHECK(rel_close(kl_gaussian_to_gibbs_1d(obj, gamma, 1.5, 0.7, -12, 12), exact, 1e-6));
  CHECK(rel_close(gibbs_expected_suboptimality_1d(obj, gamma, -12, 12), 1 / (2 * gamma), 1e-6));
}

TEST_CASE("polyak gap and gradient second moment") {
  const auto obj = test::quadratic(5, 2, 2);
  const auto grid = box_grid(2, -3, 3, 11);
  CHECK(polyak_gap_check(obj, grid).holds);
  std::mt19937_64 gen(3);
  const auto g = gibbs_moments(family_of(obj), 2.0);
  std::vector<double> samples;
  for (int t = 0; t < 5000; ++t) {
    const Vector x = g.mean + test::random_vector(2, gen, std::sqrt(0.5));
    samples.insert(samples.end(), x.data(), x.data() + 2);
  }
  const auto chk = grad_second_moment_bound_check(obj, 2.0, samples);
  CHECK(chk.holds);
  CHECK(std::abs(chk.lhs - 1.0) < 4 * chk.se);
  const auto sub = suboptimality(obj, samples);
  CHECK(std::abs(sub.value - 0.5) < 4 * sub.se);
}

TEST_CASE("talagrand on gaussians") {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 20; ++t) {
    const double gamma = 1 + t % 5;
    const std::size_t d = 1 + t % 3;
    GaussianMoments nu{Vector::Zero(static_cast<Eigen::Index>(d)), Matrix::Identity(d, d) / gamma};
    GaussianMoments rho{test::random_vector(d, gen), random_spd(d, gen)};
    const double w = w2_gaussians(rho, nu);
    CHECK(gamma / 2 * w * w <= kl_gaussians(rho, nu) * (1 + 1e-12));
  }
}

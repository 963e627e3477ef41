#include "vrld/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vrld/samplers.hpp"

namespace vrld {

void GaussianMoments::validate() const {
  require(cov.rows() == mean.size() && cov.cols() == mean.size(), ErrorKind::Numerical,
          "covariance shape does not match the mean");
  require(mean.allFinite() && cov.allFinite(), ErrorKind::Numerical, "non-finite Gaussian moments");
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()), ErrorKind::Numerical, "covariance not symmetric");
  Eigen::LLT<Matrix> llt(cov);
  require(llt.info() == Eigen::Success, ErrorKind::Numerical, "covariance not positive definite");
}

GaussianMoments gaussian_moment_oracle_lmc(double eta, double gamma, std::size_t k, const Vector& m0,
                                           const Matrix& S0) {
  require(eta > 0 && eta < 2, ErrorKind::InvalidArgument, "the LMC moment oracle needs 0 < eta < 2");
  require(gamma > 0, ErrorKind::InvalidArgument, "gamma must be positive");
  require(S0.rows() == m0.size() && S0.cols() == m0.size(), ErrorKind::InvalidArgument, "S0 shape mismatch");
  GaussianMoments g{m0, S0};
  const double a = 1 - eta;
  const double noise = 2 * eta / gamma;
  const auto d = m0.size();
  for (std::size_t i = 0; i < k; ++i) {
    g.mean *= a;
    g.cov = a * a * g.cov + noise * Matrix::Identity(d, d);
  }
  return g;
}

GaussianMoments lmc_stationary_moments(double eta, double gamma, std::size_t d) {
  require(eta > 0 && eta < 2 && gamma > 0, ErrorKind::InvalidArgument, "need 0 < eta < 2 and gamma > 0");
  const auto dd = static_cast<Eigen::Index>(d);
  return {Vector::Zero(dd), Matrix::Identity(dd, dd) / (gamma * (1 - eta / 2))};
}

GaussianMoments gibbs_moments(const QuadraticFamily& family, double gamma) {
  require(gamma > 0, ErrorKind::InvalidArgument, "gamma must be positive");
  const Vector hbar = family.mean_curvature();
  Matrix cov = Matrix::Zero(hbar.size(), hbar.size());
  cov.diagonal() = hbar.cwiseInverse() / gamma;
  return {family.mean_shift().cwiseQuotient(hbar), cov};
}

namespace {

struct SvrgState {
  Vector my, mz;        // means of y = x - x*, z = anchor - x*
  Matrix syy, syz, szz; // raw second moments
};

Matrix batch_noise_covariance(const QuadraticFamily& family, std::size_t batch) {
  const auto n = static_cast<std::size_t>(family.curvatures().rows());
  require(batch >= 1 && batch <= n, ErrorKind::InvalidArgument, "batch must lie in [1, n]");
  if (n == 1) return Matrix::Zero(family.curvatures().cols(), family.curvatures().cols());
  const double xi = static_cast<double>(n - batch) / (static_cast<double>(batch) * static_cast<double>(n - 1));
  const Matrix centred = family.curvatures().rowwise() - family.curvatures().colwise().mean();
  return xi * (centred.transpose() * centred) / static_cast<double>(n);
}

class SvrgRecursion {
 public:
  SvrgRecursion(const QuadraticFamily& family, double eta, double gamma, std::size_t batch, std::size_t m)
      : eta_(eta), m_(m), noise_(2 * eta / gamma), x_star_(family.mean_shift().cwiseQuotient(family.mean_curvature())) {
    require(eta > 0 && gamma > 0, ErrorKind::InvalidArgument, "eta and gamma must be positive");
    require(m >= 1, ErrorKind::InvalidArgument, "m must be >= 1");
    a_ = Vector::Ones(family.mean_curvature().size()) - eta * family.mean_curvature();
    aa_ = a_ * a_.transpose();
    c_ = batch_noise_covariance(family, batch);
  }

  SvrgState start(const Vector& m0, const Matrix& S0) const {
    const Vector my = m0 - x_star_;
    const Matrix syy = S0 + my * my.transpose();
    return {my, my, syy, syy, syy};
  }

  void step(SvrgState& st, std::size_t k) const {
    const auto d = st.my.size();
    if (k % m_ == 0) {
      st.mz = st.my;
      st.szz = st.syy;
      st.syz = st.syy;
      st.syy = aa_.cwiseProduct(st.syy) + noise_ * Matrix::Identity(d, d);
    } else {
      const Matrix w = st.syy - st.syz - st.syz.transpose() + st.szz;
      st.syy = aa_.cwiseProduct(st.syy) + eta_ * eta_ * c_.cwiseProduct(w) + noise_ * Matrix::Identity(d, d);
    }
    st.syz = a_.asDiagonal() * st.syz;
    st.my = a_.cwiseProduct(st.my);
  }

  GaussianMoments moments(const SvrgState& st) const {
    Matrix cov = st.syy - st.my * st.my.transpose();
    cov = 0.5 * (cov + cov.transpose());
    return {st.my + x_star_, cov};
  }

  std::size_t m() const noexcept { return m_; }

 private:
  double eta_;
  std::size_t m_;
  double noise_;
  Vector x_star_, a_;
  Matrix aa_, c_;
};

}  // namespace

std::vector<GaussianMoments> svrg_moment_path(const QuadraticFamily& family, double eta, double gamma,
                                              std::size_t batch, std::size_t m, std::span<const std::size_t> steps,
                                              const Vector& m0, const Matrix& S0) {
  require(std::is_sorted(steps.begin(), steps.end()), ErrorKind::InvalidArgument, "steps must be ascending");
  const SvrgRecursion rec(family, eta, gamma, batch, m);
  SvrgState st = rec.start(m0, S0);
  std::vector<GaussianMoments> out;
  out.reserve(steps.size());
  std::size_t k = 0;
  for (std::size_t target : steps) {
    while (k < target) rec.step(st, k++);
    out.push_back(rec.moments(st));
  }
  return out;
}

GaussianMoments svrg_stationary_moments(const QuadraticFamily& family, double eta, double gamma, std::size_t batch,
                                        std::size_t m, std::size_t max_epochs) {
  const SvrgRecursion rec(family, eta, gamma, batch, m);
  const auto d = family.mean_curvature().size();
  SvrgState st = rec.start(Vector::Zero(d) + family.mean_shift().cwiseQuotient(family.mean_curvature()),
                           Matrix::Identity(d, d) / gamma);
  std::size_t k = 0;
  for (std::size_t e = 0; e < max_epochs; ++e) {
    const Matrix before = st.syy;
    for (std::size_t r = 0; r < m; ++r) rec.step(st, k++);
    if ((st.syy - before).cwiseAbs().maxCoeff() <= 1e-15 * st.syy.cwiseAbs().maxCoeff()) break;
  }
  return rec.moments(st);
}

double kl_gaussians(const GaussianMoments& p, const GaussianMoments& q) {
  require(p.dim() == q.dim(), ErrorKind::InvalidArgument, "Gaussian dimensions differ");
  Eigen::LLT<Matrix> lq(q.cov), lp(p.cov);
  require(lq.info() == Eigen::Success && lp.info() == Eigen::Success, ErrorKind::Numerical,
          "KL needs positive-definite covariances");
  const auto d = static_cast<double>(p.dim());
  const double trace = lq.solve(p.cov).trace();
  const Vector diff = q.mean - p.mean;
  const double maha = diff.dot(lq.solve(diff));
  const double logdet_q = 2 * Matrix(lq.matrixL()).diagonal().array().log().sum();
  const double logdet_p = 2 * Matrix(lp.matrixL()).diagonal().array().log().sum();
  return std::max(0.0, 0.5 * (trace + maha - d + logdet_q - logdet_p));
}

double kl_symmetric(const GaussianMoments& p, const GaussianMoments& q) { return kl_gaussians(p, q) + kl_gaussians(q, p); }

namespace {

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()));
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double w2_gaussians(const GaussianMoments& p, const GaussianMoments& q) {
  require(p.dim() == q.dim(), ErrorKind::InvalidArgument, "Gaussian dimensions differ");
  const Matrix rq = psd_sqrt(q.cov);
  const Matrix cross = psd_sqrt(rq * p.cov * rq);
  const double bures = p.cov.trace() + q.cov.trace() - 2 * cross.trace();
  return std::sqrt(std::max(0.0, (p.mean - q.mean).squaredNorm() + bures));
}

double w2_empirical_1d(std::span<const double> xs, std::span<const double> ys) {
  require(!xs.empty() && !ys.empty(), ErrorKind::InvalidArgument, "empirical W2 needs nonempty samples");
  std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  // Walk the merged quantile breakpoints i/na and j/nb.
  std::size_t i = 0, j = 0;
  double t = 0, acc = 0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    const double diff = a[i] - b[j];
    acc += (next - t) * diff * diff;
    t = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return std::sqrt(acc);
}

SampleStats sample_stats(std::span<const double> samples, std::size_t d, const FiniteSumObjective* obj) {
  require(d >= 1 && samples.size() % d == 0, ErrorKind::InvalidArgument, "sample buffer is not a multiple of d");
  const std::size_t count = samples.size() / d;
  require(count >= 2, ErrorKind::InvalidArgument, "sample statistics need at least two samples");
  const auto dd = static_cast<Eigen::Index>(d);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> x(samples.data(), static_cast<Eigen::Index>(count), dd);

  SampleStats s;
  s.count = count;
  const double nn = static_cast<double>(count);
  s.mean = x.colwise().sum().transpose() / nn;
  const RowMat c = x.rowwise() - s.mean.transpose();
  s.cov = (c.transpose() * c) / (nn - 1);
  s.mean_se = (s.cov.diagonal() / nn).cwiseSqrt();
  s.cov_se.resize(dd, dd);
  for (Eigen::Index j = 0; j < dd; ++j) {
    for (Eigen::Index l = j; l < dd; ++l) {
      const Eigen::ArrayXd u = c.col(j).array() * c.col(l).array();
      const double mu = u.mean();
      const double var = (u - mu).square().sum() / (nn - 1);
      s.cov_se(j, l) = s.cov_se(l, j) = std::sqrt(var / nn);
    }
  }
  if (obj) {
    require(obj->d() == d, ErrorKind::InvalidArgument, "objective dimension mismatch");
    Eigen::ArrayXd f(static_cast<Eigen::Index>(count));
    for (std::size_t t = 0; t < count; ++t) f[static_cast<Eigen::Index>(t)] = obj->value(x.row(static_cast<Eigen::Index>(t)).transpose());
    s.mean_value = f.mean();
    s.value_se = std::sqrt((f - *s.mean_value).square().sum() / (nn - 1) / nn);
  }
  return s;
}

double moment_kl_surrogate(const GaussianMoments& fitted, const GaussianMoments& target) {
  return kl_gaussians(fitted, target);
}

Estimate suboptimality(const FiniteSumObjective& obj, std::span<const double> samples) {
  const auto& reg = obj.regularity();
  require(reg.F_star.has_value(), ErrorKind::Config, "suboptimality needs a declared F_star");
  const std::size_t d = obj.d();
  require(!samples.empty() && samples.size() % d == 0, ErrorKind::InvalidArgument, "bad sample buffer");
  const std::size_t count = samples.size() / d;
  double sum = 0, sum2 = 0;
  for (std::size_t t = 0; t < count; ++t) {
    const double f = obj.value(Eigen::Map<const Vector>(samples.data() + t * d, static_cast<Eigen::Index>(d))) -
                     reg.F_star->value;
    sum += f;
    sum2 += f * f;
  }
  const double nn = static_cast<double>(count);
  const double mean = sum / nn;
  const double var = count > 1 ? std::max(0.0, (sum2 - nn * mean * mean) / (nn - 1)) : 0.0;
  return {mean, std::sqrt(var / nn)};
}

double quadratic_suboptimality(const QuadraticFamily& family, const GaussianMoments& law) {
  const Vector hbar = family.mean_curvature();
  const Vector x_star = family.mean_shift().cwiseQuotient(hbar);
  const Vector shift = law.mean - x_star;
  return 0.5 * (hbar.dot(law.cov.diagonal()) + hbar.dot(shift.cwiseProduct(shift)));
}

VarianceIdentity svrg_variance_identity_check(const FiniteSumObjective& obj, const Vector& x, const Vector& anchor,
                                              std::size_t batch) {
  const std::size_t n = obj.n();
  require(n <= 12, ErrorKind::InvalidArgument, "exhaustive subset enumeration needs n <= 12");
  const Vector gx = obj.full_gradient(x);
  const Vector ga = obj.full_gradient(anchor);

  double lhs = 0;
  std::size_t subsets = 0;
  Vector v(x.size());
  for_each_subset(n, batch, [&](std::span<const std::size_t> idx) {
    svrg_estimate(obj, x, anchor, ga, idx, v);
    lhs += (v - gx).squaredNorm();
    ++subsets;
  });
  lhs /= static_cast<double>(subsets);

  double mean_sq = 0;
  Vector gi(x.size()), gai(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    obj.component_gradient(i, x, gi);
    obj.component_gradient(i, anchor, gai);
    mean_sq += (gi - gai + ga - gx).squaredNorm();
  }
  mean_sq /= static_cast<double>(n);
  const double xi = n == 1 ? 0.0
                           : static_cast<double>(n - batch) / (static_cast<double>(batch) * static_cast<double>(n - 1));
  VarianceIdentity out;
  out.lhs = lhs;
  out.rhs = xi * mean_sq;
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

MomentBoundCheck grad_second_moment_bound_check(const FiniteSumObjective& obj, double gamma,
                                                std::span<const double> samples) {
  const auto& reg = obj.regularity();
  require(reg.L.has_value(), ErrorKind::Config, "the gradient moment bound needs L");
  require(gamma > 0, ErrorKind::InvalidArgument, "gamma must be positive");
  const std::size_t d = obj.d();
  require(samples.size() >= 2 * d && samples.size() % d == 0, ErrorKind::InvalidArgument, "need >= 2 samples");
  const std::size_t count = samples.size() / d;
  Vector g(static_cast<Eigen::Index>(d));
  double sum = 0, sum2 = 0;
  for (std::size_t t = 0; t < count; ++t) {
    obj.full_gradient(Eigen::Map<const Vector>(samples.data() + t * d, static_cast<Eigen::Index>(d)), g);
    const double q = g.squaredNorm();
    sum += q;
    sum2 += q * q;
  }
  const double nn = static_cast<double>(count);
  MomentBoundCheck out;
  out.lhs = sum / nn;
  out.se = std::sqrt(std::max(0.0, (sum2 - nn * out.lhs * out.lhs) / (nn - 1)) / nn);
  out.bound = static_cast<double>(d) * reg.L->value / gamma;
  out.holds = out.lhs <= out.bound + 3 * out.se;
  return out;
}

PolyakReport polyak_gap_check(const FiniteSumObjective& obj, std::span<const Vector> grid) {
  const auto& reg = obj.regularity();
  require(reg.F_star.has_value() && reg.L.has_value(), ErrorKind::Config, "the Polyak gap check needs F_star and L");
  require(!grid.empty(), ErrorKind::InvalidArgument, "grid must be nonempty");
  PolyakReport rep;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (const Vector& x : grid) {
    const double gap = obj.value(x) - reg.F_star->value - obj.full_gradient(x).squaredNorm() / (2 * reg.L->value);
    if (gap < rep.min_gap) {
      rep.min_gap = gap;
      rep.argmin = x;
    }
  }
  rep.holds = rep.min_gap >= -1e-10;
  return rep;
}

namespace {

struct Quadrature1d {
  std::vector<double> x, w;  // nodes and trapezoid weights
};

Quadrature1d trapezoid(double lo, double hi, std::size_t points) {
  require(points >= 3 && hi > lo, ErrorKind::InvalidArgument, "quadrature needs hi > lo and >= 3 points");
  Quadrature1d q;
  q.x.resize(points);
  q.w.resize(points);
  const double h = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    q.x[i] = lo + h * static_cast<double>(i);
    q.w[i] = (i == 0 || i + 1 == points) ? h / 2 : h;
  }
  return q;
}

/// log of the normalising constant and the values F at the nodes.
double gibbs_log_z(const FiniteSumObjective& obj, double gamma, const Quadrature1d& q, std::vector<double>& f) {
  require(obj.d() == 1, ErrorKind::InvalidArgument, "1-d quadrature needs a 1-d objective");
  f.resize(q.x.size());
  Vector x(1);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    x[0] = q.x[i];
    f[i] = obj.value(x);
    lo = std::min(lo, f[i]);
  }
  double z = 0;
  for (std::size_t i = 0; i < q.x.size(); ++i) z += q.w[i] * std::exp(-gamma * (f[i] - lo));
  return std::log(z) - gamma * lo;
}

}  // namespace

double kl_gaussian_to_gibbs_1d(const FiniteSumObjective& obj, double gamma, double mean, double std, double lo,
                               double hi, std::size_t points) {
  require(std > 0, ErrorKind::InvalidArgument, "initial std must be positive");
  const Quadrature1d q = trapezoid(lo, hi, points);
  std::vector<double> f;
  const double log_z = gibbs_log_z(obj, gamma, q, f);
  double ef = 0, mass = 0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    const double u = (q.x[i] - mean) / std;
    const double rho = std::exp(-0.5 * u * u) / (std * std::sqrt(2 * std::numbers::pi));
    ef += q.w[i] * rho * f[i];
    mass += q.w[i] * rho;
  }
  require(std::abs(mass - 1) < 1e-6, ErrorKind::Numerical, "quadrature window does not cover the initial law");
  const double neg_entropy = -0.5 * std::log(2 * std::numbers::pi * std::numbers::e * std * std);
  return neg_entropy + gamma * ef + log_z;
}

double gibbs_expected_suboptimality_1d(const FiniteSumObjective& obj, double gamma, double lo, double hi,
                                       std::size_t points) {
  const auto& reg = obj.regularity();
  require(reg.F_star.has_value(), ErrorKind::Config, "needs a declared F_star");
  const Quadrature1d q = trapezoid(lo, hi, points);
  std::vector<double> f;
  const double log_z = gibbs_log_z(obj, gamma, q, f);
  double acc = 0;
  for (std::size_t i = 0; i < q.x.size(); ++i) acc += q.w[i] * std::exp(-gamma * f[i] - log_z) * (f[i] - reg.F_star->value);
  return acc;
}

}  // namespace vrld

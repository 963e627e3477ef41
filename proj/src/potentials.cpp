#include "vrld/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "vrld/rng.hpp"

namespace vrld {

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Analytic: return "analytic";
    case Provenance::AnalyticOnDomain: return "analytic_on_domain";
    case Provenance::Numeric: return "numeric";
    case Provenance::Estimated: return "estimated";
    case Provenance::Declared: return "declared";
  }
  return "unknown";
}

FiniteSumObjective::FiniteSumObjective(std::string name, std::shared_ptr<const ComponentFamily> family,
                                       Regularity reg)
    : name_(std::move(name)),
      family_(std::move(family)),
      reg_(std::move(reg)),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  require(family_ != nullptr, ErrorKind::InvalidArgument, "objective needs a component family");
  require(family_->size() >= 1 && family_->dim() >= 1, ErrorKind::InvalidArgument,
          "objective needs n >= 1 and d >= 1");
  if (reg_.L) require(reg_.L->value > 0, ErrorKind::InvalidArgument, "L must be positive");
  if (reg_.M) require(reg_.M->value > 0, ErrorKind::InvalidArgument, "M must be positive");
  if (reg_.b) require(reg_.b->value >= 0, ErrorKind::InvalidArgument, "b must be nonnegative");
}

FiniteSumObjective FiniteSumObjective::with_regularity(Regularity reg) const {
  return FiniteSumObjective(name_, family_, std::move(reg));
}

double FiniteSumObjective::value(const Vector& x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < n(); ++i) acc += family_->value(i, x);
  return acc / static_cast<double>(n());
}

double FiniteSumObjective::component_value(std::size_t i, const Vector& x) const {
  require(i < n(), ErrorKind::Contract, "component index out of range");
  return family_->value(i, x);
}

void FiniteSumObjective::component_gradient(std::size_t i, const Vector& x, Vector& out) const {
  require(i < n(), ErrorKind::Contract, "component index out of range");
  out.resize(static_cast<Eigen::Index>(d()));
  family_->gradient(i, x, out);
  count(1);
}

Vector FiniteSumObjective::full_gradient(const Vector& x) const {
  Vector out(static_cast<Eigen::Index>(d()));
  full_gradient(x, out);
  return out;
}

void FiniteSumObjective::full_gradient(const Vector& x, Vector& out) const {
  require(x.size() == static_cast<Eigen::Index>(d()), ErrorKind::InvalidArgument, "dimension mismatch");
  out.setZero(static_cast<Eigen::Index>(d()));
  Vector g(static_cast<Eigen::Index>(d()));
  for (std::size_t i = 0; i < n(); ++i) {
    family_->gradient(i, x, g);
    out += g;
  }
  count(n());
  out /= static_cast<double>(n());
  if (!out.allFinite()) fail(ErrorKind::Numerical, "non-finite gradient in objective '" + name_ + "'");
}

Vector FiniteSumObjective::minibatch_gradient(const Vector& x, std::span<const std::size_t> idx) const {
  require(!idx.empty(), ErrorKind::Contract, "minibatch must be nonempty");
  std::vector<std::size_t> sorted(idx.begin(), idx.end());
  std::sort(sorted.begin(), sorted.end());
  require(sorted.back() < n(), ErrorKind::Contract, "minibatch index out of range");
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorKind::Contract,
          "minibatch indices must be distinct");
  require(x.size() == static_cast<Eigen::Index>(d()), ErrorKind::InvalidArgument, "dimension mismatch");
  Vector out(static_cast<Eigen::Index>(d()));
  batch_gradient(x, idx, out);
  if (!out.allFinite()) fail(ErrorKind::Numerical, "non-finite minibatch gradient");
  return out;
}

void FiniteSumObjective::batch_gradient(const Vector& x, std::span<const std::size_t> idx, Vector& out) const {
  out.setZero(static_cast<Eigen::Index>(d()));
  Vector g(static_cast<Eigen::Index>(d()));
  for (std::size_t i : idx) {
    family_->gradient(i, x, g);
    out += g;
  }
  count(idx.size());
  out /= static_cast<double>(idx.size());
}

void FiniteSumObjective::batch_difference(const Vector& x, const Vector& y, std::span<const std::size_t> idx,
                                          Vector& out) const {
  out.setZero(static_cast<Eigen::Index>(d()));
  Vector gx(static_cast<Eigen::Index>(d()));
  Vector gy(static_cast<Eigen::Index>(d()));
  for (std::size_t i : idx) {
    family_->gradient(i, x, gx);
    family_->gradient(i, y, gy);
    out += gx - gy;
  }
  count(2 * idx.size());
  out /= static_cast<double>(idx.size());
}

// ---------------------------------------------------------------------------

namespace {

Matrix zero_mean_tilts(std::size_t n, std::size_t d, double scale, std::uint64_t seed) {
  Matrix u = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  if (n < 2 || scale == 0.0) return u;
  Philox4x32 eng(seed, stream_id(0, Substream::Init));
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = scale * normal(eng);
  u.rowwise() -= u.colwise().mean();
  return u;
}

/// Base potential plus per-component linear tilt <u_i, x>.
class TiltedFamily : public ComponentFamily {
 public:
  explicit TiltedFamily(Matrix tilts) : tilts_(std::move(tilts)) {}
  std::size_t size() const noexcept override { return static_cast<std::size_t>(tilts_.rows()); }
  std::size_t dim() const noexcept override { return static_cast<std::size_t>(tilts_.cols()); }
  double value(std::size_t i, const Vector& x) const override {
    return base_value(x) + tilts_.row(static_cast<Eigen::Index>(i)).dot(x);
  }
  void gradient(std::size_t i, const Vector& x, Vector& out) const override {
    base_gradient(x, out);
    out += tilts_.row(static_cast<Eigen::Index>(i)).transpose();
  }
  virtual double base_value(const Vector& x) const = 0;
  virtual void base_gradient(const Vector& x, Vector& out) const = 0;

 private:
  Matrix tilts_;
};

class DoubleWellFamily final : public TiltedFamily {
 public:
  DoubleWellFamily(double a, Matrix tilts) : TiltedFamily(std::move(tilts)), a2_(a * a) {}
  double base_value(const Vector& x) const override {
    const double w = x[0] * x[0] - a2_;
    double v = 0.25 * w * w;
    if (x.size() > 1) v += 0.5 * x[1] * x[1];
    return v;
  }
  void base_gradient(const Vector& x, Vector& out) const override {
    out[0] = x[0] * (x[0] * x[0] - a2_);
    if (x.size() > 1) out[1] = x[1];
  }

 private:
  double a2_;
};

class MixtureFamily final : public TiltedFamily {
 public:
  MixtureFamily(Vector mu1, Vector mu2, double w, double s, Matrix tilts)
      : TiltedFamily(std::move(tilts)),
        mu1_(std::move(mu1)),
        mu2_(std::move(mu2)),
        logw1_(std::log(w)),
        logw2_(std::log1p(-w)),
        s2_(s * s) {}

  /// Posterior weight of the first component at x.
  double responsibility(const Vector& x) const {
    const double l1 = logw1_ - (x - mu1_).squaredNorm() / (2 * s2_);
    const double l2 = logw2_ - (x - mu2_).squaredNorm() / (2 * s2_);
    return 1.0 / (1.0 + std::exp(l2 - l1));
  }

  double base_value(const Vector& x) const override {
    const double l1 = logw1_ - (x - mu1_).squaredNorm() / (2 * s2_);
    const double l2 = logw2_ - (x - mu2_).squaredNorm() / (2 * s2_);
    const double hi = std::max(l1, l2);
    const double lse = hi + std::log(std::exp(l1 - hi) + std::exp(l2 - hi));
    const double norm = 0.5 * static_cast<double>(x.size()) * std::log(2 * std::numbers::pi * s2_);
    return norm - lse;
  }
  void base_gradient(const Vector& x, Vector& out) const override {
    const double r = responsibility(x);
    out = (x - r * mu1_ - (1 - r) * mu2_) / s2_;
  }
  Matrix base_hessian(const Vector& x) const {
    const double r = responsibility(x);
    const Vector delta = mu1_ - mu2_;
    const auto d = x.size();
    return Matrix::Identity(d, d) / s2_ - (r * (1 - r) / (s2_ * s2_)) * delta * delta.transpose();
  }

 private:
  Vector mu1_, mu2_;
  double logw1_, logw2_, s2_;
};

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class LogisticFamily final : public ComponentFamily {
 public:
  LogisticFamily(Matrix a, Vector y, double lambda) : a_(std::move(a)), y_(std::move(y)), lambda_(lambda) {}
  std::size_t size() const noexcept override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t dim() const noexcept override { return static_cast<std::size_t>(a_.cols()); }
  double value(std::size_t i, const Vector& x) const override {
    const auto r = static_cast<Eigen::Index>(i);
    const double z = a_.row(r).dot(x);
    return softplus(z) - y_[r] * z + 0.5 * lambda_ * x.squaredNorm();
  }
  void gradient(std::size_t i, const Vector& x, Vector& out) const override {
    const auto r = static_cast<Eigen::Index>(i);
    const double z = a_.row(r).dot(x);
    out = (sigmoid(z) - y_[r]) * a_.row(r).transpose() + lambda_ * x;
  }
  Matrix hessian(const Vector& x) const {
    const auto d = a_.cols();
    Matrix h = lambda_ * Matrix::Identity(d, d);
    for (Eigen::Index r = 0; r < a_.rows(); ++r) {
      const double p = sigmoid(a_.row(r).dot(x));
      h += (p * (1 - p) / static_cast<double>(a_.rows())) * a_.row(r).transpose() * a_.row(r);
    }
    return h;
  }
  Vector gradient_sum(const Vector& x) const {
    Vector g = Vector::Zero(a_.cols());
    Vector gi(a_.cols());
    for (std::size_t i = 0; i < size(); ++i) {
      gradient(i, x, gi);
      g += gi;
    }
    return g / static_cast<double>(size());
  }
  double mean_value(const Vector& x) const {
    double v = 0;
    for (std::size_t i = 0; i < size(); ++i) v += value(i, x);
    return v / static_cast<double>(size());
  }

 private:
  Matrix a_;
  Vector y_;
  double lambda_;
};

/// Damped Newton iteration; returns the final point.
template <typename Value, typename Grad, typename Hess>
Vector newton_minimize(Vector x, Value&& f, Grad&& grad, Hess&& hess, double gtol) {
  for (int it = 0; it < 200; ++it) {
    const Vector g = grad(x);
    if (g.norm() <= gtol) break;
    Eigen::LLT<Matrix> llt(hess(x));
    Vector dir = llt.info() == Eigen::Success ? Vector(-llt.solve(g)) : Vector(-g);
    double t = 1.0;
    const double f0 = f(x);
    while (t > 1e-12 && !(f(x + t * dir) <= f0 + 1e-4 * t * g.dot(dir))) t *= 0.5;
    if (t <= 1e-12) break;
    x += t * dir;
  }
  return x;
}

}  // namespace

QuadraticFamily::QuadraticFamily(Matrix centers, Matrix curvatures)
    : centers_(std::move(centers)), curvatures_(std::move(curvatures)) {
  require(centers_.rows() >= 1 && centers_.cols() >= 1, ErrorKind::InvalidArgument, "empty centers");
  require(curvatures_.rows() == centers_.rows() && curvatures_.cols() == centers_.cols(),
          ErrorKind::InvalidArgument, "curvatures must match centers in shape");
  require((curvatures_.array() > 0).all(), ErrorKind::InvalidArgument, "curvatures must be positive");
}

double QuadraticFamily::value(std::size_t i, const Vector& x) const {
  const auto r = static_cast<Eigen::Index>(i);
  return 0.5 * (curvatures_.row(r).transpose().array() * (x - centers_.row(r).transpose()).array().square()).sum();
}

void QuadraticFamily::gradient(std::size_t i, const Vector& x, Vector& out) const {
  const auto r = static_cast<Eigen::Index>(i);
  out = curvatures_.row(r).transpose().cwiseProduct(x - centers_.row(r).transpose());
}

FiniteSumObjective make_gaussian_quadratic(Matrix centers) {
  Matrix ones = Matrix::Ones(centers.rows(), centers.cols());
  return make_gaussian_quadratic(std::move(centers), std::move(ones));
}

FiniteSumObjective make_gaussian_quadratic(Matrix centers, Matrix curvatures) {
  auto family = std::make_shared<QuadraticFamily>(std::move(centers), std::move(curvatures));
  const Vector hbar = family->mean_curvature();
  const Vector x_star = family->mean_shift().cwiseQuotient(hbar);
  const double hmin = hbar.minCoeff();

  Regularity reg;
  reg.L = Constant{family->curvatures().maxCoeff(), Provenance::Analytic};
  reg.M = Constant{0.5 * hmin, Provenance::Analytic};
  reg.b = Constant{hbar.cwiseProduct(x_star).squaredNorm() / (2 * hmin), Provenance::Analytic};
  double f_star = 0.0;
  for (std::size_t i = 0; i < family->size(); ++i) f_star += family->value(i, x_star);
  reg.F_star = Constant{f_star / static_cast<double>(family->size()), Provenance::Analytic};
  reg.x_star = x_star;
  return FiniteSumObjective("gaussian_quadratic", std::move(family), std::move(reg));
}

FiniteSumObjective make_double_well(std::size_t dim, double a, std::size_t n, double tilt_scale,
                                    std::uint64_t data_seed, double domain_radius) {
  require(dim == 1 || dim == 2, ErrorKind::Config, "double_well supports d = 1 or d = 2");
  require(a > 0, ErrorKind::Config, "double_well needs a > 0");
  require(n >= 1, ErrorKind::Config, "double_well needs n >= 1");
  require(domain_radius >= a, ErrorKind::Config, "double_well domain_radius must be >= a");
  auto family = std::make_shared<DoubleWellFamily>(a, zero_mean_tilts(n, dim, tilt_scale, data_seed));

  const double a2 = a * a;
  const double r2 = domain_radius * domain_radius;
  double L = std::max(3 * r2 - a2, a2);
  if (dim == 2) L = std::max(L, 1.0);
  Regularity reg;
  reg.L = Constant{L, Provenance::AnalyticOnDomain};
  reg.domain_note = "L valid on |x_1| <= " + std::to_string(domain_radius);
  // x^4 - a^2 x^2 >= (a^2/2) x^2 - a^4 for all x; the quadratic x_2 term is 1-dissipative.
  reg.M = Constant{dim == 2 ? std::min(0.5 * a2, 1.0) : 0.5 * a2, Provenance::Analytic};
  reg.b = Constant{a2 * a2, Provenance::Analytic};
  reg.F_star = Constant{0.0, Provenance::Analytic};
  Vector xs = Vector::Zero(static_cast<Eigen::Index>(dim));
  xs[0] = a;
  reg.x_star = xs;
  return FiniteSumObjective("double_well", std::move(family), std::move(reg));
}

FiniteSumObjective make_gaussian_mixture(Vector mu1, Vector mu2, double weight, double scale, std::size_t n,
                                         double tilt_scale, std::uint64_t data_seed) {
  require(mu1.size() >= 1 && mu1.size() == mu2.size(), ErrorKind::Config, "mixture means must share a dimension");
  require(weight > 0 && weight < 1, ErrorKind::Config, "mixture weight must lie in (0, 1)");
  require(scale > 0, ErrorKind::Config, "mixture scale must be positive");
  require(n >= 1, ErrorKind::Config, "mixture needs n >= 1");
  const auto d = static_cast<std::size_t>(mu1.size());
  auto family = std::make_shared<MixtureFamily>(mu1, mu2, weight, scale, zero_mean_tilts(n, d, tilt_scale, data_seed));

  const double s2 = scale * scale;
  const double gap2 = (mu1 - mu2).squaredNorm();
  const double radius2 = std::max(mu1.squaredNorm(), mu2.squaredNorm());
  Regularity reg;
  reg.L = Constant{std::max(1.0 / s2, gap2 / (4 * s2 * s2) - 1.0 / s2), Provenance::Analytic};
  reg.M = Constant{1.0 / (2 * s2), Provenance::Analytic};
  reg.b = Constant{radius2 / (2 * s2), Provenance::Analytic};

  auto f = [&](const Vector& x) { return family->base_value(x); };
  auto g = [&](const Vector& x) {
    Vector out(x.size());
    family->base_gradient(x, out);
    return out;
  };
  auto h = [&](const Vector& x) { return family->base_hessian(x); };
  Vector best = newton_minimize(mu1, f, g, h, 1e-13);
  Vector other = newton_minimize(mu2, f, g, h, 1e-13);
  if (f(other) < f(best)) best = other;
  reg.F_star = Constant{f(best), Provenance::Numeric};
  reg.x_star = best;
  return FiniteSumObjective("gaussian_mixture", std::move(family), std::move(reg));
}

FiniteSumObjective make_logistic_l2(Matrix features, Vector labels, double lambda) {
  require(features.rows() >= 1 && features.cols() >= 1, ErrorKind::Config, "logistic_l2 needs data");
  require(labels.size() == features.rows(), ErrorKind::Config, "one label per sample row");
  require(((labels.array() == 0.0) || (labels.array() == 1.0)).all(), ErrorKind::Config,
          "logistic_l2 labels must be 0 or 1");
  require(lambda > 0, ErrorKind::Config, "logistic_l2 needs lambda > 0 (otherwise the Hessian is not PD)");
  require(features.allFinite(), ErrorKind::Config, "logistic_l2 features must be finite");
  const double max_row2 = features.rowwise().squaredNorm().maxCoeff();
  auto family = std::make_shared<LogisticFamily>(std::move(features), std::move(labels), lambda);

  Regularity reg;
  reg.L = Constant{lambda + 0.25 * max_row2, Provenance::Analytic};
  reg.M = Constant{0.5 * lambda, Provenance::Analytic};
  reg.b = Constant{max_row2 / (2 * lambda), Provenance::Analytic};
  const Vector x = newton_minimize(
      Vector::Zero(static_cast<Eigen::Index>(family->dim())), [&](const Vector& v) { return family->mean_value(v); },
      [&](const Vector& v) { return family->gradient_sum(v); }, [&](const Vector& v) { return family->hessian(v); },
      1e-13);
  reg.F_star = Constant{family->mean_value(x), Provenance::Numeric};
  reg.x_star = x;
  return FiniteSumObjective("logistic_l2", std::move(family), std::move(reg));
}

LabeledData load_labeled_data(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open data file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": not a number: " + tok);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": inconsistent column count");
    if (row.size() < 2)
      fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": need features and a label");
    if (row.back() != 0.0 && row.back() != 1.0)
      fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": label must be 0 or 1");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::Config, path.string() + ": no samples");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  LabeledData data{Matrix(n, d), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = rows[i][j];
    data.labels[i] = rows[i].back();
  }
  return data;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"gaussian_quadratic", "double_well", "gaussian_mixture",
                                              "logistic_l2"};
  return names;
}

namespace {

std::size_t positive_size(const ParamMap& p, std::string_view key, std::int64_t fallback) {
  const auto v = p.get<std::int64_t>(key, fallback);
  if (v < 1) fail(ErrorKind::Config, std::string(key) + " must be >= 1");
  return static_cast<std::size_t>(v);
}

Vector to_vector(const Reals& r) { return Eigen::Map<const Vector>(r.data(), static_cast<Eigen::Index>(r.size())); }

FiniteSumObjective build_quadratic(const ParamMap& p) {
  const auto seed = static_cast<std::uint64_t>(p.get<std::int64_t>("data_seed", 0));
  Matrix centers;
  if (auto c = p.find<Reals>("centers")) {
    const std::size_t d = positive_size(p, "d", 1);
    if (c->empty() || c->size() % d != 0) fail(ErrorKind::Config, "centers length must be a multiple of d");
    const std::size_t n = c->size() / d;
    if (p.contains("n") && positive_size(p, "n", 1) != n) fail(ErrorKind::Config, "centers length must equal n*d");
    centers = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        c->data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  } else {
    const std::size_t n = positive_size(p, "n", 1);
    const std::size_t d = positive_size(p, "d", 1);
    const double spread = p.get<double>("center_spread", 1.0);
    centers = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Philox4x32 eng(seed, stream_id(0, Substream::Noise));
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < centers.rows(); ++i)
      for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(i, j) = spread * normal(eng);
  }
  if (p.get<bool>("recenter", false)) centers.rowwise() -= centers.colwise().mean();

  const double hspread = p.get<double>("curvature_spread", 0.0);
  if (!(hspread >= 0 && hspread < 1)) fail(ErrorKind::Config, "curvature_spread must lie in [0, 1)");
  Matrix curv = Matrix::Ones(centers.rows(), centers.cols());
  if (hspread > 0) {
    Philox4x32 eng(seed, stream_id(0, Substream::Index));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (Eigen::Index i = 0; i < curv.rows(); ++i)
      for (Eigen::Index j = 0; j < curv.cols(); ++j) curv(i, j) = 1.0 + hspread * unif(eng);
    // Normalise each coordinate to mean curvature one so that F keeps Hessian I.
    const Eigen::RowVectorXd mean = curv.colwise().mean();
    for (Eigen::Index i = 0; i < curv.rows(); ++i) curv.row(i).array() /= mean.array();
  }
  return make_gaussian_quadratic(std::move(centers), std::move(curv));
}

FiniteSumObjective build_logistic(const ParamMap& p) {
  const double lambda = p.get<double>("lambda", 0.1);
  if (auto file = p.find<std::string>("data_file")) {
    auto data = load_labeled_data(*file);
    return make_logistic_l2(std::move(data.features), std::move(data.labels), lambda);
  }
  const std::size_t n = positive_size(p, "n", 32);
  const std::size_t d = positive_size(p, "d", 2);
  const auto seed = static_cast<std::uint64_t>(p.get<std::int64_t>("data_seed", 0));
  Philox4x32 eng(seed, stream_id(0, Substream::Noise));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector w(static_cast<Eigen::Index>(d));
  for (auto& wi : w) wi = normal(eng);
  Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(eng);
    y[i] = unif(eng) < sigmoid(a.row(i).dot(w)) ? 1.0 : 0.0;
  }
  return make_logistic_l2(std::move(a), std::move(y), lambda);
}

}  // namespace

FiniteSumObjective make_builtin(std::string_view name, const ParamMap& params) {
  FiniteSumObjective obj = [&] {
    const auto seed = static_cast<std::uint64_t>(params.get<std::int64_t>("data_seed", 0));
    if (name == "gaussian_quadratic") {
      params.check_keys({"name", "n", "d", "centers", "center_spread", "recenter", "curvature_spread", "data_seed",
                         "L", "M", "b"},
                        "gaussian_quadratic");
      return build_quadratic(params);
    }
    if (name == "double_well") {
      params.check_keys({"name", "n", "d", "a", "tilt", "domain_radius", "data_seed", "L", "M", "b"}, "double_well");
      const double a = params.get<double>("a", 1.0);
      return make_double_well(positive_size(params, "d", 1), a, positive_size(params, "n", 1),
                              params.get<double>("tilt", 0.0), seed, params.get<double>("domain_radius", 3.0 * a));
    }
    if (name == "gaussian_mixture") {
      params.check_keys({"name", "n", "mean1", "mean2", "weight", "scale", "tilt", "data_seed", "L", "M", "b"},
                        "gaussian_mixture");
      return make_gaussian_mixture(to_vector(params.get<Reals>("mean1", {-1.0})),
                                   to_vector(params.get<Reals>("mean2", {1.0})), params.get<double>("weight", 0.5),
                                   params.get<double>("scale", 0.5), positive_size(params, "n", 1),
                                   params.get<double>("tilt", 0.0), seed);
    }
    if (name == "logistic_l2") {
      params.check_keys({"name", "n", "d", "data_file", "lambda", "data_seed", "L", "M", "b"}, "logistic_l2");
      return build_logistic(params);
    }
    fail(ErrorKind::Config, "unknown potential '" + std::string(name) + "'");
  }();

  Regularity reg = obj.regularity();
  bool overridden = false;
  for (auto [key, slot] : {std::pair{"L", &reg.L}, std::pair{"M", &reg.M}, std::pair{"b", &reg.b}}) {
    if (auto v = params.find<double>(key)) {
      *slot = Constant{*v, Provenance::Declared};
      overridden = true;
    }
  }
  return overridden ? obj.with_regularity(std::move(reg)) : obj;
}

// ---------------------------------------------------------------------------

double fd_hessian_norm(const FiniteSumObjective& obj, const Vector& x, std::size_t component, double h) {
  const auto d = static_cast<Eigen::Index>(obj.d());
  Matrix hess(d, d);
  Vector gp(d), gm(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    if (component == static_cast<std::size_t>(-1)) {
      obj.full_gradient(xp, gp);
      obj.full_gradient(xm, gm);
    } else {
      obj.component_gradient(component, xp, gp);
      obj.component_gradient(component, xm, gm);
    }
    hess.col(j) = (gp - gm) / (2 * h);
  }
  const Matrix sym = 0.5 * (hess + hess.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

RegularityReport probe_regularity(const FiniteSumObjective& obj, std::span<const Vector> grid, double fd_step) {
  require(!grid.empty(), ErrorKind::InvalidArgument, "probe grid must be nonempty");
  RegularityReport report;
  report.points = grid.size();
  report.min_curvature_ratio = std::numeric_limits<double>::infinity();
  const auto& reg = obj.regularity();
  const bool dissipative = reg.M && reg.b;
  if (dissipative) report.min_dissipativity_slack = std::numeric_limits<double>::infinity();

  for (const Vector& x : grid) {
    double worst = fd_hessian_norm(obj, x, static_cast<std::size_t>(-1), fd_step);
    for (std::size_t i = 0; i < obj.n(); ++i) worst = std::max(worst, fd_hessian_norm(obj, x, i, fd_step));
    report.max_local_lipschitz = std::max(report.max_local_lipschitz, worst);

    const Vector g = obj.full_gradient(x);
    const double inner = g.dot(x);
    const double r2 = x.squaredNorm();
    if (r2 > 0) report.min_curvature_ratio = std::min(report.min_curvature_ratio, inner / r2);
    if (dissipative)
      report.min_dissipativity_slack = std::min(*report.min_dissipativity_slack, inner - reg.M->value * r2 + reg.b->value);
  }
  if (reg.L) {
    report.declared_L = reg.L->value;
    report.lipschitz_holds = report.max_local_lipschitz <= reg.L->value * (1 + 1e-6);
  }
  if (dissipative) report.dissipativity_holds = *report.min_dissipativity_slack >= 0;
  return report;
}

std::vector<Vector> box_grid(std::size_t d, double lo, double hi, std::size_t per_axis) {
  require(d >= 1 && per_axis >= 1, ErrorKind::InvalidArgument, "box_grid needs d >= 1 and per_axis >= 1");
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= per_axis;
  std::vector<Vector> pts;
  pts.reserve(total);
  const double step = per_axis > 1 ? (hi - lo) / static_cast<double>(per_axis - 1) : 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vector x(static_cast<Eigen::Index>(d));
    std::size_t rest = flat;
    for (std::size_t j = 0; j < d; ++j) {
      x[static_cast<Eigen::Index>(j)] = lo + step * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

OriginConstants origin_constants(const FiniteSumObjective& obj) {
  OriginConstants c;
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(obj.d()));
  Vector g;
  for (std::size_t i = 0; i < obj.n(); ++i) {
    c.A_star = std::max(c.A_star, std::abs(obj.component_value(i, zero)));
    obj.component_gradient(i, zero, g);
    c.B_star = std::max(c.B_star, g.norm());
  }
  return c;
}

}  // namespace vrld

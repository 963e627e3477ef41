#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vrld/params.hpp"

namespace vrld {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Where a regularity constant came from. Theory-mode computations refuse
/// Estimated constants unless the user re-declares them.
enum class Provenance {
  Analytic,          // exact, valid on all of R^d
  AnalyticOnDomain,  // exact on a stated bounded domain only
  Numeric,           // computed to solver tolerance (e.g. a Newton minimizer)
  Estimated,         // grid / finite-difference estimate
  Declared,          // supplied by the user
};

std::string_view to_string(Provenance p) noexcept;

struct Constant {
  double value = 0.0;
  Provenance source = Provenance::Declared;
};

struct Regularity {
  std::optional<Constant> L;       // smoothness of every f_i and of F
  std::optional<Constant> M;       // dissipativity <grad F(x), x> >= M|x|^2 - b
  std::optional<Constant> b;
  std::optional<Constant> F_star;  // global minimum value
  std::optional<Vector> x_star;    // a global minimizer
  std::string domain_note;         // validity domain for AnalyticOnDomain constants
};

/// The n component functions f_i : R^d -> R of a finite sum.
/// Implementations must be pure functions of x (safe to call concurrently).
class ComponentFamily {
 public:
  virtual ~ComponentFamily() = default;
  virtual std::size_t size() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;
  virtual double value(std::size_t i, const Vector& x) const = 0;
  /// Writes grad f_i(x) into `out`, which is already sized dim().
  virtual void gradient(std::size_t i, const Vector& x, Vector& out) const = 0;
};

/// F(x) = (1/n) sum_i f_i(x), with declared regularity metadata and a shared
/// component-gradient evaluation counter.
///
/// Objects are immutable after construction except for the counter, which is
/// atomic and shared between copies so replicate chains can run concurrently.
/// Component indices are 0-based.
class FiniteSumObjective {
 public:
  FiniteSumObjective(std::string name, std::shared_ptr<const ComponentFamily> family, Regularity reg);

  const std::string& name() const noexcept { return name_; }
  std::size_t n() const noexcept { return family_->size(); }
  std::size_t d() const noexcept { return family_->dim(); }
  const Regularity& regularity() const noexcept { return reg_; }
  const ComponentFamily& family() const noexcept { return *family_; }

  /// Same components, new metadata, fresh counter.
  FiniteSumObjective with_regularity(Regularity reg) const;

  double value(const Vector& x) const;
  double component_value(std::size_t i, const Vector& x) const;

  /// Each of these adds the number of component gradients it evaluates to
  /// the counter.
  void component_gradient(std::size_t i, const Vector& x, Vector& out) const;
  Vector full_gradient(const Vector& x) const;
  void full_gradient(const Vector& x, Vector& out) const;

  /// Checked minibatch gradient: indices must be distinct and < n.
  Vector minibatch_gradient(const Vector& x, std::span<const std::size_t> idx) const;

  /// Unchecked variants used on sampler hot paths.
  /// batch_gradient: out = (1/|I|) sum_{i in I} grad f_i(x)
  /// batch_difference: out = (1/|I|) sum_{i in I} (grad f_i(x) - grad f_i(y))
  void batch_gradient(const Vector& x, std::span<const std::size_t> idx, Vector& out) const;
  void batch_difference(const Vector& x, const Vector& y, std::span<const std::size_t> idx, Vector& out) const;

  std::uint64_t evaluations() const noexcept { return counter_->load(std::memory_order_relaxed); }
  void reset_evaluations() const noexcept { counter_->store(0, std::memory_order_relaxed); }
  void add_evaluations(std::uint64_t k) const noexcept { count(k); }

 private:
  void count(std::uint64_t k) const noexcept { counter_->fetch_add(k, std::memory_order_relaxed); }

  std::string name_;
  std::shared_ptr<const ComponentFamily> family_;
  Regularity reg_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

// ---------------------------------------------------------------------------
// Built-in potentials

/// f_i(x) = 1/2 sum_j h_ij (x_j - c_ij)^2, rows of `centers`/`curvatures`
/// are components. With unit curvatures this is 1/2 |x - c_i|^2.
class QuadraticFamily final : public ComponentFamily {
 public:
  QuadraticFamily(Matrix centers, Matrix curvatures);
  std::size_t size() const noexcept override { return static_cast<std::size_t>(centers_.rows()); }
  std::size_t dim() const noexcept override { return static_cast<std::size_t>(centers_.cols()); }
  double value(std::size_t i, const Vector& x) const override;
  void gradient(std::size_t i, const Vector& x, Vector& out) const override;

  const Matrix& centers() const noexcept { return centers_; }
  const Matrix& curvatures() const noexcept { return curvatures_; }
  /// Diagonal of the Hessian of F.
  Vector mean_curvature() const { return curvatures_.colwise().mean().transpose(); }
  /// Linear coefficient q in grad F(x) = diag(mean_curvature) x - q.
  Vector mean_shift() const { return curvatures_.cwiseProduct(centers_).colwise().mean().transpose(); }

 private:
  Matrix centers_;
  Matrix curvatures_;
};

FiniteSumObjective make_gaussian_quadratic(Matrix centers);
FiniteSumObjective make_gaussian_quadratic(Matrix centers, Matrix curvatures);

/// 1-d: F(x) = 1/4 (x^2 - a^2)^2; 2-d adds 1/2 x_2^2. Components add zero-mean
/// linear tilts <u_i, x>, so F itself is the pure double well.
FiniteSumObjective make_double_well(std::size_t dim, double a, std::size_t n, double tilt_scale,
                                    std::uint64_t data_seed, double domain_radius);

/// F(x) = -log(w N(x; mu1, s^2 I) + (1-w) N(x; mu2, s^2 I)) plus zero-mean tilts.
FiniteSumObjective make_gaussian_mixture(Vector mu1, Vector mu2, double weight, double scale, std::size_t n,
                                         double tilt_scale, std::uint64_t data_seed);

/// f_i(x) = log(1 + exp(a_i.x)) - y_i a_i.x + lambda/2 |x|^2, y_i in {0,1}.
FiniteSumObjective make_logistic_l2(Matrix features, Vector labels, double lambda);

struct LabeledData {
  Matrix features;
  Vector labels;
};

/// One sample per line, whitespace separated, last column the 0/1 label.
/// Blank lines and lines starting with '#' are skipped.
LabeledData load_labeled_data(const std::filesystem::path& path);

/// Names accepted by make_builtin.
const std::vector<std::string>& builtin_names();

/// Builds a built-in from typed parameters (see README for the keys).
/// Optional keys L, M, b override the analytic constants as Declared.
FiniteSumObjective make_builtin(std::string_view name, const ParamMap& params);

// ---------------------------------------------------------------------------
// Numerical validation of the declared constants

struct RegularityReport {
  double max_local_lipschitz = 0.0;  // max FD Hessian spectral norm over F and all f_i
  std::optional<double> declared_L;
  std::optional<bool> lipschitz_holds;           // max <= L (1 + 1e-6)
  std::optional<double> min_dissipativity_slack;  // min <grad F, x> - M|x|^2 + b
  std::optional<bool> dissipativity_holds;
  double min_curvature_ratio = 0.0;  // min <grad F(x), x> / |x|^2 over nonzero grid points
  std::size_t points = 0;
};

RegularityReport probe_regularity(const FiniteSumObjective& obj, std::span<const Vector> grid,
                                  double fd_step = 1e-5);

/// Spectral norm of the central-difference Hessian of f_i (i = npos: of F).
double fd_hessian_norm(const FiniteSumObjective& obj, const Vector& x, std::size_t component, double h);

/// Regular grid on [lo, hi]^d with `per_axis` points per axis.
std::vector<Vector> box_grid(std::size_t d, double lo, double hi, std::size_t per_axis);

/// A* = max_i |f_i(0)| and B* = max_i |grad f_i(0)|.
struct OriginConstants {
  double A_star = 0.0;
  double B_star = 0.0;
};
OriginConstants origin_constants(const FiniteSumObjective& obj);

}  // namespace vrld

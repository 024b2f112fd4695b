#include "metamodel/inputmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace metamodel {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

const boost::math::normal& standard_normal() {
  static const boost::math::normal dist(0.0, 1.0);
  return dist;
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

double normal_cdf(double z);
double normal_quantile(double u);

namespace {

// Normal and lognormal marginals map in closed form, which keeps full precision in the tails.
double marginal_to_normal(const Marginal& m, double x) {
  const double lo = normal_quantile(kCdfClip);
  switch (m.family()) {
    case Family::normal: return std::clamp((x - m.param(0)) / m.param(1), lo, -lo);
    case Family::lognormal: return std::clamp((std::log(x) - m.param(0)) / m.param(1), lo, -lo);
    default: return normal_quantile(std::clamp(m.cdf(x), kCdfClip, 1.0 - kCdfClip));
  }
}

double normal_to_marginal(const Marginal& m, double z) {
  switch (m.family()) {
    case Family::normal: return m.param(0) + m.param(1) * z;
    case Family::lognormal: return std::exp(m.param(0) + m.param(1) * z);
    default: return m.quantile(std::clamp(normal_cdf(z), kCdfClip, 1.0 - kCdfClip));
  }
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::normal: return "normal";
    case Family::lognormal: return "lognormal";
    case Family::uniform: return "uniform";
    case Family::gumbel: return "gumbel";
    case Family::truncated_normal: return "truncated-normal";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "normal" || name == "gaussian") return Family::normal;
  if (name == "lognormal") return Family::lognormal;
  if (name == "uniform") return Family::uniform;
  if (name == "gumbel") return Family::gumbel;
  if (name == "truncated-normal" || name == "truncated_normal") return Family::truncated_normal;
  throw std::invalid_argument("unknown marginal family '" + std::string(name) + "'");
}

double normal_cdf(double z) {
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return boost::math::cdf(standard_normal(), z);
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("normal quantile requires u in (0,1)");
  }
  return boost::math::quantile(standard_normal(), u);
}

Marginal::Marginal(Family family, double a, double b, std::string label)
    : family_(family), params_{a, b}, label_(std::move(label)) {}

Marginal Marginal::normal(double mean, double stddev, std::string label) {
  require_positive(stddev, "normal standard deviation");
  return {Family::normal, mean, stddev, std::move(label)};
}

Marginal Marginal::lognormal(double lambda, double zeta, std::string label) {
  require_positive(zeta, "lognormal zeta");
  return {Family::lognormal, lambda, zeta, std::move(label)};
}

Marginal Marginal::uniform(double lower, double upper, std::string label) {
  if (!(upper > lower)) throw std::invalid_argument("uniform requires lower < upper");
  return {Family::uniform, lower, upper, std::move(label)};
}

Marginal Marginal::gumbel(double location, double scale, std::string label) {
  require_positive(scale, "gumbel scale");
  return {Family::gumbel, location, scale, std::move(label)};
}

Marginal Marginal::truncated_normal(double mu, double sigma, std::string label) {
  require_positive(sigma, "truncated-normal sigma");
  return {Family::truncated_normal, mu, sigma, std::move(label)};
}

bool Marginal::in_support(double x) const {
  if (!std::isfinite(x)) return false;
  switch (family_) {
    case Family::lognormal: return x > 0.0;
    case Family::uniform: return x >= params_[0] && x <= params_[1];
    case Family::truncated_normal: return x >= 0.0;
    default: return true;
  }
}

double Marginal::cdf(double x) const {
  const auto [a, b] = params_;
  switch (family_) {
    case Family::normal: return normal_cdf((x - a) / b);
    case Family::lognormal: return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - a) / b);
    case Family::uniform:
      if (x <= a) return 0.0;
      if (x >= b) return 1.0;
      return (x - a) / (b - a);
    case Family::gumbel: return std::exp(-std::exp(-(x - a) / b));
    case Family::truncated_normal: {
      if (x <= 0.0) return 0.0;
      const double lower = normal_cdf(-a / b);
      const double mass = normal_cdf(a / b);
      return (normal_cdf((x - a) / b) - lower) / mass;
    }
  }
  return 0.0;
}

double Marginal::pdf(double x) const {
  const auto [a, b] = params_;
  switch (family_) {
    case Family::normal: return normal_pdf((x - a) / b) / b;
    case Family::lognormal:
      return x <= 0.0 ? 0.0 : normal_pdf((std::log(x) - a) / b) / (b * x);
    case Family::uniform: return (x < a || x > b) ? 0.0 : 1.0 / (b - a);
    case Family::gumbel: {
      const double t = (x - a) / b;
      return std::exp(-t - std::exp(-t)) / b;
    }
    case Family::truncated_normal:
      return x < 0.0 ? 0.0 : normal_pdf((x - a) / b) / (b * normal_cdf(a / b));
  }
  return 0.0;
}

double Marginal::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile requires u in (0,1)");
  const auto [a, b] = params_;
  switch (family_) {
    case Family::normal: return a + b * normal_quantile(u);
    case Family::lognormal: return std::exp(a + b * normal_quantile(u));
    case Family::uniform: return a + u * (b - a);
    case Family::gumbel: return a - b * std::log(-std::log(u));
    case Family::truncated_normal: {
      const double lower = normal_cdf(-a / b);
      const double mass = normal_cdf(a / b);
      double p = lower + u * mass;
      p = std::clamp(p, kCdfClip, 1.0 - kCdfClip);
      return std::max(0.0, a + b * normal_quantile(p));
    }
  }
  return 0.0;
}

double Marginal::mean() const {
  const auto [a, b] = params_;
  switch (family_) {
    case Family::normal: return a;
    case Family::lognormal: return std::exp(a + 0.5 * b * b);
    case Family::uniform: return 0.5 * (a + b);
    case Family::gumbel: return a + kEulerGamma * b;
    case Family::truncated_normal: {
      const double alpha = -a / b;
      return a + b * normal_pdf(alpha) / normal_cdf(-alpha);
    }
  }
  return 0.0;
}

double Marginal::stddev() const {
  const auto [a, b] = params_;
  switch (family_) {
    case Family::normal: return b;
    case Family::lognormal: return std::sqrt(std::expm1(b * b)) * std::exp(a + 0.5 * b * b);
    case Family::uniform: return (b - a) / std::sqrt(12.0);
    case Family::gumbel: return std::numbers::pi * b / std::sqrt(6.0);
    case Family::truncated_normal: {
      const double alpha = -a / b;
      const double ratio = normal_pdf(alpha) / normal_cdf(-alpha);
      return b * std::sqrt(1.0 + alpha * ratio - ratio * ratio);
    }
  }
  return 0.0;
}

Marginal marginal_from_moments(Family family, double mean, double cov, std::string label) {
  if (!(cov > 0.0) || !std::isfinite(cov)) {
    throw std::invalid_argument("coefficient of variation must be positive");
  }
  if (!std::isfinite(mean)) throw std::invalid_argument("mean must be finite");
  const double sigma = cov * std::abs(mean);
  switch (family) {
    case Family::normal:
      if (mean == 0.0) throw std::invalid_argument("CoV undefined for zero mean");
      return Marginal::normal(mean, sigma, std::move(label));
    case Family::lognormal: {
      if (!(mean > 0.0)) throw std::invalid_argument("lognormal mean must be positive");
      const double zeta = std::sqrt(std::log1p(cov * cov));
      return Marginal::lognormal(std::log(mean) - 0.5 * zeta * zeta, zeta, std::move(label));
    }
    case Family::uniform: {
      if (mean == 0.0) throw std::invalid_argument("CoV undefined for zero mean");
      const double half = sigma * std::sqrt(3.0);
      return Marginal::uniform(mean - half, mean + half, std::move(label));
    }
    case Family::gumbel: {
      if (!(mean > 0.0)) throw std::invalid_argument("gumbel mean must be positive");
      const double scale = sigma * std::sqrt(6.0) / std::numbers::pi;
      return Marginal::gumbel(mean - kEulerGamma * scale, scale, std::move(label));
    }
    case Family::truncated_normal:
      throw std::invalid_argument(
          "truncated-normal marginals take natural (mu, sigma) parameters only");
  }
  throw std::invalid_argument("unsupported family");
}

InputModel::InputModel(std::vector<Marginal> marginals)
    : InputModel(marginals,
                 Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(marginals.size()),
                                           static_cast<Eigen::Index>(marginals.size()))) {}

InputModel::InputModel(std::vector<Marginal> marginals, Eigen::MatrixXd correlation)
    : marginals_(std::move(marginals)), correlation_(std::move(correlation)) {
  const Eigen::Index m = dim();
  if (m < 1) throw std::invalid_argument("input model needs at least one marginal");
  if (correlation_.rows() != m || correlation_.cols() != m) {
    throw std::invalid_argument("correlation matrix must be M x M");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(correlation_(i, i) - 1.0) > 1e-12) {
      throw std::invalid_argument("correlation matrix must have a unit diagonal");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(correlation_(i, j) - correlation_(j, i)) > 1e-12) {
        throw std::invalid_argument("correlation matrix must be symmetric");
      }
    }
  }
  independent_ = correlation_.isIdentity(0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("correlation matrix is not positive definite");
  }
  cholesky_ = llt.matrixL();
}

Eigen::VectorXd InputModel::to_standard(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("point dimension mismatch");
  Eigen::VectorXd z(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const auto& marginal = marginals_[static_cast<size_t>(i)];
    if (!marginal.in_support(x[i])) {
      throw std::domain_error("coordinate " + std::to_string(i + 1) + " outside support");
    }
    z[i] = marginal_to_normal(marginal, x[i]);
  }
  if (independent_) return z;
  return cholesky_.triangularView<Eigen::Lower>().solve(z);
}

Eigen::VectorXd InputModel::from_standard(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw std::invalid_argument("point dimension mismatch");
  const Eigen::VectorXd correlated =
      independent_ ? z : Eigen::VectorXd(cholesky_.triangularView<Eigen::Lower>() * z);
  Eigen::VectorXd x(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    x[i] = normal_to_marginal(marginals_[static_cast<size_t>(i)], correlated[i]);
  }
  return x;
}

Eigen::MatrixXd InputModel::to_standard_rows(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index q = 0; q < x.rows(); ++q) z.row(q) = to_standard(x.row(q).transpose());
  return z;
}

Eigen::MatrixXd InputModel::from_standard_rows(const Eigen::MatrixXd& z) const {
  Eigen::MatrixXd x(z.rows(), z.cols());
  for (Eigen::Index q = 0; q < z.rows(); ++q) x.row(q) = from_standard(z.row(q).transpose());
  return x;
}

Eigen::MatrixXd InputModel::sample(const Eigen::MatrixXd& u) const {
  if (u.cols() != dim()) throw std::invalid_argument("design dimension mismatch");
  Eigen::MatrixXd z(u.rows(), u.cols());
  for (Eigen::Index q = 0; q < u.rows(); ++q) {
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      if (!(u(q, i) > 0.0 && u(q, i) < 1.0)) {
        throw std::domain_error("design coordinates must lie strictly inside (0,1)");
      }
      z(q, i) = normal_quantile(u(q, i));
    }
  }
  return from_standard_rows(z);
}

}  // namespace metamodel

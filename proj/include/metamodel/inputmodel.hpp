#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace metamodel {

enum class Family { normal, lognormal, uniform, gumbel, truncated_normal };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

/// Standard normal CDF and quantile.
double normal_cdf(double z);
double normal_quantile(double u);

/// CDF values are clipped to [kCdfClip, 1 - kCdfClip] before the normal quantile.
inline constexpr double kCdfClip = 1e-15;

/// Univariate marginal law in its natural parameterization:
///   normal            (mean, std)
///   lognormal         (lambda, zeta)  -- mean and std of ln X
///   uniform           (lower, upper)
///   gumbel            (location, scale), max-type
///   truncated_normal  (mu, sigma) of the untruncated Gaussian, support [0, inf)
class Marginal {
 public:
  static Marginal normal(double mean, double stddev, std::string label = {});
  static Marginal lognormal(double lambda, double zeta, std::string label = {});
  static Marginal uniform(double lower, double upper, std::string label = {});
  static Marginal gumbel(double location, double scale, std::string label = {});
  static Marginal truncated_normal(double mu, double sigma, std::string label = {});

  Family family() const { return family_; }
  double param(int i) const { return params_[i]; }
  const std::array<double, 2>& params() const { return params_; }
  const std::string& label() const { return label_; }

  bool in_support(double x) const;
  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double u) const;
  double median() const { return quantile(0.5); }
  double mean() const;
  double stddev() const;

 private:
  Marginal(Family family, double a, double b, std::string label);

  Family family_;
  std::array<double, 2> params_;
  std::string label_;
};

/// Builds a marginal with the requested mean and coefficient of variation.
/// Throws std::invalid_argument for unsupported combinations.
Marginal marginal_from_moments(Family family, double mean, double cov,
                               std::string label = {});

/// Probabilistic input vector: marginals tied by a Gaussian copula.
/// The copula correlation is used directly in standard-normal space.
class InputModel {
 public:
  explicit InputModel(std::vector<Marginal> marginals);
  InputModel(std::vector<Marginal> marginals, Eigen::MatrixXd correlation);

  Eigen::Index dim() const { return static_cast<Eigen::Index>(marginals_.size()); }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  bool independent() const { return independent_; }

  Eigen::VectorXd to_standard(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_standard(const Eigen::VectorXd& z) const;

  /// Row-wise maps over N x M point sets.
  Eigen::MatrixXd to_standard_rows(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd from_standard_rows(const Eigen::MatrixXd& z) const;

  /// Maps unit-hypercube points (strictly inside (0,1)) to physical space.
  Eigen::MatrixXd sample(const Eigen::MatrixXd& u) const;

 private:
  std::vector<Marginal> marginals_;
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd cholesky_;
  bool independent_ = true;
};

}  // namespace metamodel

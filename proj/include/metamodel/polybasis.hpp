#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace metamodel {

/// Orthonormal univariate families. Hermite is orthonormal w.r.t. the standard
/// normal density, Legendre w.r.t. the uniform density on [-1, 1].
enum class PolyFamily { hermite, legendre };

std::string_view to_string(PolyFamily family);
PolyFamily poly_family_from_string(std::string_view name);

/// Degree-k orthonormal polynomial at x (three-term recurrence).
double eval_univariate(PolyFamily family, int degree, double x);

/// Writes P_0(x) .. P_{max_degree}(x) into out (size max_degree + 1).
void eval_univariate_all(PolyFamily family, int max_degree, double x, std::span<double> out);

/// Multi-index alpha over M dimensions.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> degrees);

  size_t dim() const { return degrees_.size(); }
  int operator[](size_t i) const { return degrees_[i]; }
  const std::vector<int>& degrees() const { return degrees_; }
  int total_degree() const;
  int max_degree() const;
  double q_norm(double q) const;

  /// Graded order: total degree first, then descending lexicographic.
  std::strong_ordering operator<=>(const MultiIndex& other) const;
  bool operator==(const MultiIndex& other) const = default;

 private:
  std::vector<int> degrees_;
};

struct Truncation {
  enum class Kind { hyperbolic, per_dimension, explicit_set };
  Kind kind = Kind::explicit_set;
  int total_degree = 0;
  double q = 1.0;
  std::vector<int> degrees;
};

/// Ordered set of distinct multi-indices with one polynomial family per dimension.
class BasisSet {
 public:
  BasisSet() = default;
  BasisSet(std::vector<PolyFamily> families, std::vector<MultiIndex> indices,
           Truncation truncation = {});

  size_t size() const { return indices_.size(); }
  size_t dim() const { return families_.size(); }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const MultiIndex& operator[](size_t j) const { return indices_[j]; }
  const std::vector<PolyFamily>& families() const { return families_; }
  const Truncation& truncation() const { return truncation_; }
  int max_degree() const { return max_degree_; }

  std::optional<size_t> find(const MultiIndex& alpha) const;
  bool contains(const MultiIndex& alpha) const { return find(alpha).has_value(); }

  /// Nonzero (dimension, degree) pairs of index j.
  std::span<const std::pair<int, int>> support(size_t j) const;

  /// New basis holding the listed entries, in the given order.
  BasisSet subset(std::span<const size_t> positions) const;

 private:
  void build_support();

  std::vector<PolyFamily> families_;
  std::vector<MultiIndex> indices_;
  Truncation truncation_;
  std::vector<std::vector<std::pair<int, int>>> support_;
  int max_degree_ = 0;
};

/// Product of univariate orthonormal polynomials; throws if alpha is not in the basis.
double eval_multivariate(const BasisSet& basis, const MultiIndex& alpha, const Eigen::VectorXd& z);

/// { alpha : ||alpha||_q <= total_degree }, graded ordering, one family for all dims.
BasisSet enumerate_hyperbolic(int dim, int total_degree, double q,
                              PolyFamily family = PolyFamily::hermite);

/// As above with per-dimension families; returns nullopt as soon as the set
/// would exceed max_size elements.
std::optional<BasisSet> enumerate_hyperbolic(const std::vector<PolyFamily>& families,
                                             int total_degree, double q, size_t max_size);

/// Full tensor set { alpha : alpha_i <= degrees_i }.
BasisSet enumerate_tensor(const std::vector<PolyFamily>& families, const std::vector<int>& degrees);

/// N x card(A) matrix of basis evaluations at standardized points (rows).
Eigen::MatrixXd design_matrix(const BasisSet& basis, const Eigen::MatrixXd& points);

/// binomial(dim + total_degree, total_degree), the q = 1 cardinality.
std::uint64_t total_degree_count(int dim, int total_degree);
/// prod_i (degrees_i + 1), the full tensor-product cardinality.
std::uint64_t tensor_product_count(const std::vector<int>& degrees);
/// rank * sum_i (degrees_i + 1), unknowns of a canonical low-rank approximation.
std::uint64_t lra_unknown_count(int rank, const std::vector<int>& degrees);

}  // namespace metamodel

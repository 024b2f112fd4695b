#include "metamodel/polybasis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace metamodel {

namespace {

constexpr double kNormTolerance = 1e-9;

}  // namespace

std::string_view to_string(PolyFamily family) {
  return family == PolyFamily::hermite ? "hermite" : "legendre";
}

PolyFamily poly_family_from_string(std::string_view name) {
  if (name == "hermite") return PolyFamily::hermite;
  if (name == "legendre") return PolyFamily::legendre;
  throw std::invalid_argument("unknown polynomial family '" + std::string(name) + "'");
}

void eval_univariate_all(PolyFamily family, int max_degree, double x, std::span<double> out) {
  if (max_degree < 0) throw std::invalid_argument("degree must be nonnegative");
  if (out.size() < static_cast<size_t>(max_degree) + 1) {
    throw std::invalid_argument("output span too small");
  }
  out[0] = 1.0;
  if (max_degree == 0) return;
  if (family == PolyFamily::hermite) {
    // P_{k+1} = (x P_k - sqrt(k) P_{k-1}) / sqrt(k+1)
    out[1] = x;
    for (int k = 1; k < max_degree; ++k) {
      out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                   std::sqrt(static_cast<double>(k + 1));
    }
    return;
  }
  // Legendre: recurse on the classical L_k, then scale by sqrt(2k+1).
  double prev = 1.0;
  double cur = x;
  out[1] = std::sqrt(3.0) * x;
  for (int k = 1; k < max_degree; ++k) {
    const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
    prev = cur;
    cur = next;
    out[k + 1] = std::sqrt(2.0 * (k + 1) + 1.0) * cur;
  }
}

double eval_univariate(PolyFamily family, int degree, double x) {
  if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
  std::vector<double> values(static_cast<size_t>(degree) + 1);
  eval_univariate_all(family, degree, x, values);
  return values.back();
}

MultiIndex::MultiIndex(std::vector<int> degrees) : degrees_(std::move(degrees)) {
  for (int d : degrees_) {
    if (d < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
  }
}

int MultiIndex::total_degree() const {
  int sum = 0;
  for (int d : degrees_) sum += d;
  return sum;
}

int MultiIndex::max_degree() const {
  return degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
}

double MultiIndex::q_norm(double q) const {
  double sum = 0.0;
  for (int d : degrees_) {
    if (d > 0) sum += std::pow(static_cast<double>(d), q);
  }
  return std::pow(sum, 1.0 / q);
}

std::strong_ordering MultiIndex::operator<=>(const MultiIndex& other) const {
  if (auto c = total_degree() <=> other.total_degree(); c != 0) return c;
  // Reversed so that (2,0) precedes (1,1) precedes (0,2).
  return other.degrees_ <=> degrees_;
}

BasisSet::BasisSet(std::vector<PolyFamily> families, std::vector<MultiIndex> indices,
                   Truncation truncation)
    : families_(std::move(families)), indices_(std::move(indices)),
      truncation_(std::move(truncation)) {
  for (const auto& alpha : indices_) {
    if (alpha.dim() != families_.size()) {
      throw std::invalid_argument("multi-index length differs from basis dimension");
    }
  }
  build_support();
}

void BasisSet::build_support() {
  support_.clear();
  support_.reserve(indices_.size());
  max_degree_ = 0;
  for (const auto& alpha : indices_) {
    std::vector<std::pair<int, int>> nz;
    for (size_t i = 0; i < alpha.dim(); ++i) {
      if (alpha[i] > 0) nz.emplace_back(static_cast<int>(i), alpha[i]);
    }
    max_degree_ = std::max(max_degree_, alpha.max_degree());
    support_.push_back(std::move(nz));
  }
}

std::optional<size_t> BasisSet::find(const MultiIndex& alpha) const {
  for (size_t j = 0; j < indices_.size(); ++j) {
    if (indices_[j] == alpha) return j;
  }
  return std::nullopt;
}

std::span<const std::pair<int, int>> BasisSet::support(size_t j) const { return support_[j]; }

BasisSet BasisSet::subset(std::span<const size_t> positions) const {
  std::vector<MultiIndex> chosen;
  chosen.reserve(positions.size());
  for (size_t p : positions) chosen.push_back(indices_.at(p));
  Truncation t = truncation_;
  t.kind = Truncation::Kind::explicit_set;
  return BasisSet(families_, std::move(chosen), std::move(t));
}

double eval_multivariate(const BasisSet& basis, const MultiIndex& alpha, const Eigen::VectorXd& z) {
  if (!basis.contains(alpha)) throw std::invalid_argument("multi-index not in basis");
  if (static_cast<size_t>(z.size()) != basis.dim()) {
    throw std::invalid_argument("point dimension mismatch");
  }
  double value = 1.0;
  for (size_t i = 0; i < alpha.dim(); ++i) {
    if (alpha[i] > 0) value *= eval_univariate(basis.families()[i], alpha[i], z[i]);
  }
  return value;
}

namespace {

// Depth-first enumeration over dimensions, pruning on the partial q-norm.
class HyperbolicEnumerator {
 public:
  HyperbolicEnumerator(size_t dim, int total_degree, double q, size_t max_size)
      : dim_(dim), total_degree_(total_degree), q_(q), max_size_(max_size),
        limit_(std::pow(total_degree + kNormTolerance, q)), current_(dim, 0) {}

  bool run() { return visit(0, 0.0); }
  std::vector<MultiIndex> take() { return std::move(found_); }

 private:
  bool visit(size_t i, double partial) {
    if (i == dim_) {
      if (found_.size() >= max_size_) return false;
      found_.emplace_back(current_);
      return true;
    }
    for (int d = 0; d <= total_degree_; ++d) {
      const double next = d == 0 ? partial : partial + std::pow(static_cast<double>(d), q_);
      if (next > limit_) break;
      current_[i] = d;
      if (!visit(i + 1, next)) return false;
    }
    current_[i] = 0;
    return true;
  }

  size_t dim_;
  int total_degree_;
  double q_;
  size_t max_size_;
  double limit_;
  std::vector<int> current_;
  std::vector<MultiIndex> found_;
};

}  // namespace

std::optional<BasisSet> enumerate_hyperbolic(const std::vector<PolyFamily>& families,
                                             int total_degree, double q, size_t max_size) {
  if (families.empty()) throw std::invalid_argument("basis dimension must be >= 1");
  if (total_degree < 0) throw std::invalid_argument("total degree must be >= 0");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in (0, 1]");
  HyperbolicEnumerator enumerator(families.size(), total_degree, q, max_size);
  if (!enumerator.run()) return std::nullopt;
  auto indices = enumerator.take();
  std::sort(indices.begin(), indices.end());
  Truncation t{Truncation::Kind::hyperbolic, total_degree, q, {}};
  return BasisSet(families, std::move(indices), std::move(t));
}

BasisSet enumerate_hyperbolic(int dim, int total_degree, double q, PolyFamily family) {
  if (dim < 1) throw std::invalid_argument("basis dimension must be >= 1");
  auto basis = enumerate_hyperbolic(std::vector<PolyFamily>(static_cast<size_t>(dim), family),
                                    total_degree, q, std::numeric_limits<size_t>::max());
  return std::move(*basis);
}

BasisSet enumerate_tensor(const std::vector<PolyFamily>& families, const std::vector<int>& degrees) {
  if (families.size() != degrees.size()) throw std::invalid_argument("degree list length mismatch");
  std::vector<MultiIndex> indices;
  std::vector<int> current(degrees.size(), 0);
  while (true) {
    indices.emplace_back(current);
    size_t i = 0;
    while (i < current.size() && current[i] == degrees[i]) current[i++] = 0;
    if (i == current.size()) break;
    ++current[i];
  }
  std::sort(indices.begin(), indices.end());
  Truncation t{Truncation::Kind::per_dimension, 0, 1.0, degrees};
  return BasisSet(families, std::move(indices), std::move(t));
}

Eigen::MatrixXd design_matrix(const BasisSet& basis, const Eigen::MatrixXd& points) {
  const auto n = points.rows();
  const auto m = static_cast<Eigen::Index>(basis.dim());
  if (points.cols() != m) throw std::invalid_argument("point dimension mismatch");
  const int pmax = basis.max_degree();
  // table(i * (pmax+1) + k, q) = P_k^{(i)}(z_qi)
  Eigen::MatrixXd table((pmax + 1) * m, n);
  std::vector<double> buffer(static_cast<size_t>(pmax) + 1);
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index i = 0; i < m; ++i) {
      eval_univariate_all(basis.families()[static_cast<size_t>(i)], pmax, points(q, i), buffer);
      for (int k = 0; k <= pmax; ++k) table(i * (pmax + 1) + k, q) = buffer[static_cast<size_t>(k)];
    }
  }
  Eigen::MatrixXd psi(n, static_cast<Eigen::Index>(basis.size()));
  for (size_t j = 0; j < basis.size(); ++j) {
    const auto support = basis.support(j);
    auto column = psi.col(static_cast<Eigen::Index>(j));
    column.setOnes();
    for (const auto& [i, k] : support) {
      column.array() *= table.row(i * (pmax + 1) + k).transpose().array();
    }
  }
  return psi;
}

std::uint64_t total_degree_count(int dim, int total_degree) {
  // binomial(dim + p, p) computed incrementally; exact for the sizes of interest.
  std::uint64_t result = 1;
  for (int k = 1; k <= total_degree; ++k) {
    result = result * static_cast<std::uint64_t>(dim + k) / static_cast<std::uint64_t>(k);
  }
  return result;
}

std::uint64_t tensor_product_count(const std::vector<int>& degrees) {
  std::uint64_t result = 1;
  for (int p : degrees) result *= static_cast<std::uint64_t>(p + 1);
  return result;
}

std::uint64_t lra_unknown_count(int rank, const std::vector<int>& degrees) {
  std::uint64_t per_component = 0;
  for (int p : degrees) per_component += static_cast<std::uint64_t>(p + 1);
  return static_cast<std::uint64_t>(rank) * per_component;
}

}  // namespace metamodel

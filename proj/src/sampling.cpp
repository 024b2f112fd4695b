#include "metamodel/sampling.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace metamodel {

namespace {

struct DirectionEntry {
  int degree;
  std::uint32_t interior;
  std::array<std::uint32_t, 18> m;
};

constexpr DirectionEntry kDirections[] = {
#include "sobol_directions.inc"
};

constexpr int kBits = 32;

std::vector<std::uint32_t> direction_numbers(int d) {
  const auto& entry = kDirections[d];
  std::vector<std::uint32_t> v(kBits);
  if (entry.degree == 0) {
    for (int j = 0; j < kBits; ++j) v[j] = 1u << (kBits - 1 - j);
    return v;
  }
  const int s = entry.degree;
  for (int j = 0; j < s && j < kBits; ++j) v[j] = entry.m[j] << (kBits - 1 - j);
  for (int j = s; j < kBits; ++j) {
    std::uint32_t value = v[j - s] ^ (v[j - s] >> s);
    for (int k = 1; k < s; ++k) {
      if ((entry.interior >> (s - 1 - k)) & 1u) value ^= v[j - k];
    }
    v[j] = value;
  }
  return v;
}

void require_count(int count) {
  if (count < 1) throw std::invalid_argument("design size must be >= 1");
}

void require_dim(int dim) {
  if (dim < 1) throw std::invalid_argument("design dimension must be >= 1");
}

// Unbiased integer in [0, bound) from a 64-bit engine.
std::uint64_t bounded(std::mt19937_64& engine, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::string_view to_string(Generator generator) {
  switch (generator) {
    case Generator::sobol: return "sobol";
    case Generator::lhs: return "lhs";
    case Generator::maximin_lhs: return "maximin-lhs";
    case Generator::mcs: return "mcs";
  }
  return "unknown";
}

Generator generator_from_string(std::string_view name) {
  if (name == "sobol") return Generator::sobol;
  if (name == "lhs") return Generator::lhs;
  if (name == "maximin-lhs" || name == "maximin_lhs") return Generator::maximin_lhs;
  if (name == "mcs") return Generator::mcs;
  throw std::invalid_argument("unknown design generator '" + std::string(name) + "'");
}

int sobol_max_dim() { return static_cast<int>(std::size(kDirections)); }

Design sobol(int dim, int count) {
  require_dim(dim);
  require_count(count);
  if (dim > sobol_max_dim()) {
    throw std::invalid_argument("Sobol dimension " + std::to_string(dim) +
                                " exceeds the direction-number table (" +
                                std::to_string(sobol_max_dim()) + ")");
  }
  Design design{Eigen::MatrixXd(count, dim), Generator::sobol, 0};
  std::vector<std::vector<std::uint32_t>> v(static_cast<size_t>(dim));
  for (int d = 0; d < dim; ++d) v[static_cast<size_t>(d)] = direction_numbers(d);
  std::vector<std::uint32_t> x(static_cast<size_t>(dim), 0u);
  // Gray-code ordering; point i (1-based) follows the zero point, which is skipped.
  for (int i = 0; i < count; ++i) {
    const auto index = static_cast<std::uint32_t>(i);
    int c = 0;
    while ((index >> c) & 1u) ++c;
    if (c >= kBits) throw std::invalid_argument("Sobol sequence exhausted");
    for (int d = 0; d < dim; ++d) {
      x[static_cast<size_t>(d)] ^= v[static_cast<size_t>(d)][static_cast<size_t>(c)];
      design.points(i, d) = static_cast<double>(x[static_cast<size_t>(d)]) * 0x1.0p-32;
    }
  }
  return design;
}

Design lhs(int dim, int count, std::uint64_t seed) {
  require_dim(dim);
  require_count(count);
  std::mt19937_64 engine(seed);
  Design design{Eigen::MatrixXd(count, dim), Generator::lhs, seed};
  std::vector<int> perm(static_cast<size_t>(count));
  for (int d = 0; d < dim; ++d) {
    for (int k = 0; k < count; ++k) perm[static_cast<size_t>(k)] = k;
    for (int k = count - 1; k > 0; --k) {
      const auto j = bounded(engine, static_cast<std::uint64_t>(k) + 1);
      std::swap(perm[static_cast<size_t>(k)], perm[j]);
    }
    for (int q = 0; q < count; ++q) {
      design.points(q, d) = (perm[static_cast<size_t>(q)] + open_unit(engine())) / count;
    }
  }
  return design;
}

std::uint64_t lhs_candidate_seed(std::uint64_t seed, int trial) {
  return trial == 0 ? seed : mix64(seed ^ mix64(static_cast<std::uint64_t>(trial)));
}

Design maximin_lhs(int dim, int count, std::uint64_t seed, int trials) {
  if (trials < 1) throw std::invalid_argument("maximin LHS needs at least one trial");
  Design best = lhs(dim, count, seed);
  double best_distance = min_pairwise_distance(best.points);
  for (int t = 1; t < trials; ++t) {
    Design candidate = lhs(dim, count, lhs_candidate_seed(seed, t));
    const double distance = min_pairwise_distance(candidate.points);
    if (distance > best_distance) {
      best_distance = distance;
      best = std::move(candidate);
    }
  }
  best.generator = Generator::maximin_lhs;
  best.seed = seed;
  return best;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Design mcs(int dim, int count, std::uint64_t seed) {
  require_dim(dim);
  require_count(count);
  Design design{Eigen::MatrixXd(count, dim), Generator::mcs, seed};
  const std::uint64_t key = mix64(seed);
  for (int q = 0; q < count; ++q) {
    for (int d = 0; d < dim; ++d) {
      const auto counter = static_cast<std::uint64_t>(q) * static_cast<std::uint64_t>(dim) +
                           static_cast<std::uint64_t>(d);
      design.points(q, d) = open_unit(mix64(key ^ mix64(counter)));
    }
  }
  return design;
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

}  // namespace metamodel

#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace metamodel {

enum class Generator { sobol, lhs, maximin_lhs, mcs };

std::string_view to_string(Generator generator);
Generator generator_from_string(std::string_view name);

/// Points on the open unit hypercube, one row per point.
struct Design {
  Eigen::MatrixXd points;
  Generator generator = Generator::sobol;
  std::uint64_t seed = 0;
};

/// Number of dimensions covered by the bundled direction-number table.
int sobol_max_dim();

/// First N points of the Sobol sequence, skipping the all-zeros point.
Design sobol(int dim, int count);

/// Latin hypercube: one point per stratum [(k-1)/N, k/N) in every dimension.
Design lhs(int dim, int count, std::uint64_t seed);

/// Best of `trials` LHS draws under the maximin (largest minimum distance) criterion.
/// Candidate t uses lhs_candidate_seed(seed, t); candidate 0 is lhs(dim, count, seed).
Design maximin_lhs(int dim, int count, std::uint64_t seed, int trials);
std::uint64_t lhs_candidate_seed(std::uint64_t seed, int trial);

/// I.i.d. uniform points from a counter-based generator.
Design mcs(int dim, int count, std::uint64_t seed);

/// Smallest pairwise Euclidean distance between rows (infinity for one row).
double min_pairwise_distance(const Eigen::MatrixXd& points);

/// Stateless 64-bit mixer (splitmix64 finalizer) used for counter-based streams.
std::uint64_t mix64(std::uint64_t x);

/// Uniform double strictly inside (0, 1) from 64 random bits.
inline double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace metamodel

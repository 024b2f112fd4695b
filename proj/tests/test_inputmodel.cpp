#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "metamodel/inputmodel.hpp"
#include "metamodel/sampling.hpp"
#include "oracles.hpp"

using namespace metamodel;

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// Mean and CoV of X = Q(U) by quadrature of the test-side density.
template <class Pdf>
std::pair<double, double> moments_by_quadrature(Pdf pdf, double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  const double m0 = gauss_kronrod<double, 61>::integrate(pdf, lo, hi, 15, 1e-13);
  const double m1 = gauss_kronrod<double, 61>::integrate([&](double x) { return x * pdf(x); }, lo, hi, 15, 1e-13);
  const double m2 =
      gauss_kronrod<double, 61>::integrate([&](double x) { return x * x * pdf(x); }, lo, hi, 15, 1e-13);
  const double mean = m1 / m0;
  const double var = m2 / m0 - mean * mean;
  return {mean, std::sqrt(var) / mean};
}

}  // namespace

TEST_CASE("marginal_from_moments: normal") {
  const auto m = marginal_from_moments(Family::normal, 50.0, 0.15);
  CHECK(m.family() == Family::normal);
  CHECK(m.param(0) == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(m.param(1) == doctest::Approx(7.5).epsilon(1e-14));
}

TEST_CASE("marginal_from_moments: lognormal matches inverted formulas and quadrature") {
  const auto m = marginal_from_moments(Family::lognormal, 0.15, 0.05);
  const double zeta = std::sqrt(std::log(1.0 + 0.05 * 0.05));
  const double lambda = std::log(0.15) - zeta * zeta / 2.0;
  CHECK(std::abs(m.param(0) - lambda) < 1e-14);
  CHECK(std::abs(m.param(1) - zeta) < 1e-14);
  // Gauss-Hermite moments of exp(lambda + zeta Z).
  const auto rule = oracle::gauss_hermite(64);
  double e1 = 0.0, e2 = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const double x = std::exp(m.param(0) + m.param(1) * rule.nodes[i]);
    e1 += rule.weights[i] * x;
    e2 += rule.weights[i] * x * x;
  }
  CHECK(std::abs(e1 - 0.15) / 0.15 < 1e-10);
  CHECK(std::abs(std::sqrt(e2 - e1 * e1) / e1 - 0.05) < 1e-10);
}

TEST_CASE("marginal_from_moments: gumbel matches inverted formulas and quadrature") {
  const auto m = marginal_from_moments(Family::gumbel, 50.0, 0.15);
  const double beta = 7.5 * std::sqrt(6.0) / std::numbers::pi;
  CHECK(std::abs(m.param(1) - beta) < 1e-12);
  CHECK(std::abs(m.param(0) - (50.0 - kEulerGamma * beta)) < 1e-12);
  const double mu = m.param(0);
  auto pdf = [&](double x) {
    const double z = (x - mu) / beta;
    return std::exp(-(z + std::exp(-z))) / beta;
  };
  const auto [mean, cov] = moments_by_quadrature(pdf, mu - 40 * beta, mu + 60 * beta);
  CHECK(std::abs(mean - 50.0) / 50.0 < 1e-10);
  CHECK(std::abs(cov - 0.15) < 1e-10);
}

TEST_CASE("marginal_from_moments: uniform and error cases") {
  const auto u = marginal_from_moments(Family::uniform, 2.0, 0.1);
  CHECK(u.mean() == doctest::Approx(2.0));
  CHECK(u.stddev() / u.mean() == doctest::Approx(0.1));
  CHECK_THROWS_AS(marginal_from_moments(Family::lognormal, -1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(marginal_from_moments(Family::gumbel, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(marginal_from_moments(Family::normal, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(marginal_from_moments(Family::normal, 1.0, -0.2), std::invalid_argument);
  CHECK_THROWS_AS(marginal_from_moments(Family::truncated_normal, 1.0, 0.2), std::invalid_argument);
}

TEST_CASE("scale parameters must be positive") {
  CHECK_THROWS(Marginal::normal(0.0, 0.0));
  CHECK_THROWS(Marginal::lognormal(0.0, -1.0));
  CHECK_THROWS(Marginal::gumbel(0.0, 0.0));
  CHECK_THROWS(Marginal::uniform(1.0, 1.0));
  CHECK_THROWS(Marginal::truncated_normal(1.0, 0.0));
}

TEST_CASE("truncated normal lives on [0, inf) and its CDF inverts") {
  const auto m = Marginal::truncated_normal(1.0, 0.5);
  CHECK_FALSE(m.in_support(-0.1));
  CHECK(m.cdf(0.0) == 0.0);
  for (double x : {0.05, 0.3, 1.0, 2.2}) {
    CHECK(std::abs(m.quantile(m.cdf(x)) - x) < 1e-10);
  }
  auto pdf = [](double x) { return std::exp(-0.5 * (x - 1.0) * (x - 1.0) / 0.25); };
  const auto [mean, cov] = moments_by_quadrature(pdf, 0.0, 8.0);
  CHECK(m.mean() == doctest::Approx(mean).epsilon(1e-10));
  CHECK(m.stddev() / m.mean() == doctest::Approx(cov).epsilon(1e-9));
}

TEST_CASE("quantile(cdf(x)) = x in the support interior for every family") {
  const std::vector<Marginal> marginals{
      Marginal::normal(3.0, 2.0), Marginal::lognormal(-1.0, 0.4), Marginal::uniform(-1.0, 3.0),
      Marginal::gumbel(50.0, 6.0), Marginal::truncated_normal(0.5, 1.0)};
  for (const auto& m : marginals) {
    for (double u = 0.01; u < 1.0; u += 0.0245) {
      const double x = m.quantile(u);
      CHECK(std::abs(m.quantile(m.cdf(x)) - x) <= 1e-10 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST_CASE("quantile functions are nondecreasing on a fine grid") {
  const std::vector<Marginal> marginals{
      Marginal::normal(3.0, 2.0), Marginal::lognormal(-1.0, 0.4), Marginal::uniform(-1.0, 3.0),
      Marginal::gumbel(50.0, 6.0), Marginal::truncated_normal(-0.5, 1.0)};
  for (const auto& m : marginals) {
    double previous = -INFINITY;
    for (int k = 1; k <= 1000; ++k) {
      const double x = m.quantile(k / 1001.0);
      CHECK(x >= previous);
      previous = x;
    }
  }
}

TEST_CASE("to_standard examples") {
  InputModel normals({Marginal::normal(1.0, 2.0), Marginal::normal(-3.0, 0.5)});
  const Eigen::VectorXd z = normals.to_standard(Eigen::Vector2d(2.0, -2.0));
  CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(2.0).epsilon(1e-12));

  InputModel logn({Marginal::lognormal(0.3, 0.7)});
  const double x = 2.5;
  CHECK(logn.to_standard(Eigen::VectorXd::Constant(1, x))[0] ==
        doctest::Approx((std::log(x) - 0.3) / 0.7).epsilon(1e-12));

  Eigen::Matrix3d corr;
  corr << 1.0, 0.4, 0.2, 0.4, 1.0, -0.3, 0.2, -0.3, 1.0;
  InputModel mixed({Marginal::gumbel(10.0, 2.0), Marginal::lognormal(0.0, 0.5), Marginal::uniform(0, 4)},
                   corr);
  Eigen::Vector3d medians(mixed.marginals()[0].median(), mixed.marginals()[1].median(),
                          mixed.marginals()[2].median());
  CHECK(mixed.to_standard(medians).norm() < 1e-12);
  CHECK((mixed.from_standard(Eigen::Vector3d::Zero()) - medians).norm() < 1e-12);
}

TEST_CASE("to_standard rejects points outside the support") {
  InputModel logn({Marginal::lognormal(0.0, 1.0)});
  CHECK_THROWS_AS(logn.to_standard(Eigen::VectorXd::Constant(1, -1.0)), std::domain_error);
  InputModel uni({Marginal::uniform(0.0, 1.0)});
  CHECK_THROWS_AS(uni.to_standard(Eigen::VectorXd::Constant(1, 2.0)), std::domain_error);
}

TEST_CASE("CDF values of 0 or 1 map to the clip bound instead of infinity") {
  InputModel uni({Marginal::uniform(0.0, 1.0)});
  const double lo = uni.to_standard(Eigen::VectorXd::Constant(1, 0.0))[0];
  const double hi = uni.to_standard(Eigen::VectorXd::Constant(1, 1.0))[0];
  CHECK(std::isfinite(lo));
  CHECK(std::isfinite(hi));
  CHECK(lo == doctest::Approx(normal_quantile(kCdfClip)));
  CHECK(hi == doctest::Approx(-normal_quantile(kCdfClip)));
}

TEST_CASE("from_standard examples") {
  InputModel standard({Marginal::normal(0, 1), Marginal::normal(0, 1)});
  const Eigen::Vector2d z(0.3, -1.7);
  CHECK((standard.from_standard(z) - z).norm() < 1e-14);

  Eigen::Matrix2d corr;
  corr << 1.0, 0.9, 0.9, 1.0;
  InputModel correlated({Marginal::normal(1.0, 2.0), Marginal::normal(5.0, 3.0)}, corr);
  const Eigen::VectorXd x = correlated.from_standard(Eigen::Vector2d(1.0, 0.0));
  CHECK(x[0] == doctest::Approx(1.0 + 2.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(5.0 + 0.9 * 3.0).epsilon(1e-12));
}

TEST_CASE("correlation validation") {
  Eigen::Matrix2d bad_diag;
  bad_diag << 1.0, 0.2, 0.2, 0.9;
  CHECK_THROWS_AS(InputModel({Marginal::normal(0, 1), Marginal::normal(0, 1)}, bad_diag), std::invalid_argument);
  Eigen::Matrix2d asym;
  asym << 1.0, 0.2, 0.3, 1.0;
  CHECK_THROWS_AS(InputModel({Marginal::normal(0, 1), Marginal::normal(0, 1)}, asym), std::invalid_argument);
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 1.5, 1.5, 1.0;
  CHECK_THROWS_AS(InputModel({Marginal::normal(0, 1), Marginal::normal(0, 1)}, indefinite),
                  std::invalid_argument);
  CHECK_THROWS_AS(InputModel(std::vector<Marginal>{}), std::invalid_argument);
  InputModel independent({Marginal::normal(0, 1), Marginal::normal(0, 1)}, Eigen::Matrix2d::Identity());
  CHECK(independent.independent());
}

TEST_CASE("round trip over random copulas and all families") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd corr = oracle::random_correlation(5, rng);
    InputModel model({Marginal::normal(2.0, 0.5), Marginal::lognormal(1.0, 0.3),
                      Marginal::uniform(-2.0, 5.0), Marginal::gumbel(50.0, 5.0),
                      Marginal::truncated_normal(0.2, 1.0)},
                     corr);
    for (int k = 0; k < 200; ++k) {
      Eigen::VectorXd x(5);
      for (int i = 0; i < 5; ++i) x[i] = model.marginals()[static_cast<size_t>(i)].quantile(unit(rng));
      const Eigen::VectorXd back = model.from_standard(model.to_standard(x));
      for (int i = 0; i < 5; ++i) CHECK(std::abs(back[i] - x[i]) <= 1e-8 * std::max(1.0, std::abs(x[i])));
    }
  }
}

TEST_CASE("sample examples") {
  InputModel model({Marginal::lognormal(0.5, 0.2), Marginal::uniform(-1.0, 1.0)});
  Eigen::MatrixXd u(2, 2);
  u << 0.5, 0.5, 0.3, 0.75;
  const Eigen::MatrixXd x = model.sample(u);
  CHECK(x(0, 0) == doctest::Approx(std::exp(0.5)).epsilon(1e-12));
  CHECK(std::abs(x(0, 1)) < 1e-12);
  CHECK(x(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  u(0, 0) = 0.0;
  CHECK_THROWS_AS(model.sample(u), std::domain_error);
  u(0, 0) = 1.0;
  CHECK_THROWS_AS(model.sample(u), std::domain_error);
}

TEST_CASE("sample row q equals from_standard of the normal quantiles") {
  Eigen::Matrix2d corr;
  corr << 1.0, -0.6, -0.6, 1.0;
  InputModel model({Marginal::gumbel(1.0, 0.5), Marginal::lognormal(0.0, 0.3)}, corr);
  const Eigen::MatrixXd u = mcs(2, 50, 3).points;
  const Eigen::MatrixXd x = model.sample(u);
  for (Eigen::Index q = 0; q < u.rows(); ++q) {
    const Eigen::Vector2d z(normal_quantile(u(q, 0)), normal_quantile(u(q, 1)));
    CHECK((model.from_standard(z) - x.row(q).transpose()).norm() < 1e-13);
  }
}

TEST_CASE("Monte Carlo moment recovery") {
  InputModel model({marginal_from_moments(Family::lognormal, 0.15, 0.05),
                    marginal_from_moments(Family::gumbel, 50.0, 0.15),
                    marginal_from_moments(Family::normal, -2.0, 0.3)});
  const int n = 1000000;
  const Eigen::MatrixXd x = model.sample(mcs(3, n, 11).points);
  const double targets[3][2] = {{0.15, 0.05}, {50.0, 0.15}, {-2.0, 0.3}};
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd col = x.col(i);
    const double mean = col.mean();
    const double sd = std::sqrt(oracle::sample_variance(col));
    const double sd_target = std::abs(targets[i][0]) * targets[i][1];
    CHECK(std::abs(mean - targets[i][0]) <= 3.0 * sd_target / std::sqrt(n));
    // Standard error of the sample std is about sd / sqrt(2n) (inflated for skewness).
    CHECK(std::abs(sd - sd_target) <= 3.0 * 2.0 * sd_target / std::sqrt(2.0 * n));
  }
  const Eigen::MatrixXd y = model.sample(mcs(3, 100000, 5).points);
  CHECK(std::abs(y.col(0).mean() - 0.15) / 0.15 < 0.01);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "descentlab/prox.hpp"
#include "test_util.hpp"

using namespace descentlab;

namespace {

Weights scalar(double v) {
  Weights w(1);
  w << v;
  return w;
}

// Independent oracle: minimize gamma g(z) + 1/2 (z - w)^2 on a grid over
// [-3, 3] with step 1e-4.
double grid_prox(const std::function<double(double)>& g, double gamma, double w) {
  double best_z = -3.0;
  double best_val = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= 60000; ++i) {
    const double z = -3.0 + static_cast<double>(i) * 1e-4;
    const double val = gamma * g(z) + 0.5 * (z - w) * (z - w);
    if (val < best_val) {
      best_val = val;
      best_z = z;
    }
  }
  return best_z;
}

}  // namespace

TEST_CASE("soft threshold agrees with the grid oracle") {
  const auto spec = ProxSpec::l1(1.0, 1.0);
  CHECK(prox(spec, scalar(2.0))[0] == doctest::Approx(1.0));
  const double oracle = grid_prox([](double z) { return std::abs(z); }, 1.0, 2.0);
  CHECK(std::abs(prox(spec, scalar(2.0))[0] - oracle) <= 1e-4);
  // Exactly at the kink the closed interval maps to zero.
  CHECK(prox(spec, scalar(1.0))[0] == 0.0);
  CHECK(prox(spec, scalar(-1.0))[0] == 0.0);
}

TEST_CASE("zero spec is the identity") {
  std::mt19937_64 rng(3);
  const Weights w = dltest::random_vector(rng, 6);
  CHECK((prox(ProxSpec::zero(0.7), w) - w).norm() == 0.0);
}

TEST_CASE("ball projection is radial") {
  Weights w(2);
  w << 3.0, 4.0;
  const Weights z = prox(ProxSpec::l2_ball(1.0), w);
  CHECK(z[0] == doctest::Approx(0.6));
  CHECK(z[1] == doctest::Approx(0.8));
  // Interior points are untouched.
  w << 0.1, -0.2;
  CHECK((prox(ProxSpec::l2_ball(1.0), w) - w).norm() == 0.0);
}

TEST_CASE("box projection clamps") {
  Weights lo(2), hi(2), w(2);
  lo << -1.0, -1.0;
  hi << 1.0, 2.0;
  w << -4.0, 1.5;
  const Weights z = prox(ProxSpec::box(lo, hi), w);
  CHECK(z[0] == -1.0);
  CHECK(z[1] == 1.5);
}

TEST_CASE("sq l2 shrinkage matches the grid oracle") {
  const auto spec = ProxSpec::sq_l2(2.0, 0.5);
  const double direct = prox(spec, scalar(1.5))[0];
  CHECK(direct == doctest::Approx(1.5 / 2.0));
  const double oracle =
      grid_prox([](double z) { return z * z; }, 0.5, 1.5);
  CHECK(std::abs(direct - oracle) <= 1e-4);
}

TEST_CASE("group shrinkage zeroes small blocks") {
  const auto spec = ProxSpec::group_l2({{0, 1}, {2}}, 1.0, 1.0);
  Weights w(3);
  w << 3.0, 4.0, 0.5;
  const Weights z = prox(spec, w);
  CHECK(z[0] == doctest::Approx(3.0 * (1.0 - 1.0 / 5.0)));
  CHECK(z[1] == doctest::Approx(4.0 * (1.0 - 1.0 / 5.0)));
  CHECK(z[2] == 0.0);
}

TEST_CASE("moreau identity for the l1 prox") {
  const auto spec = ProxSpec::l1(1.0, 1.0);
  CHECK(prox_via_moreau(spec, scalar(2.0))[0] == doctest::Approx(1.0));
  CHECK(prox_via_moreau(spec, Weights::Zero(4)).norm() == 0.0);
  const auto half = ProxSpec::l1(1.0, 0.5);
  CHECK(prox_via_moreau(half, scalar(-0.3))[0] == doctest::Approx(0.0));
  const double oracle = grid_prox([](double z) { return std::abs(z); }, 0.5, -0.3);
  CHECK(std::abs(prox_via_moreau(half, scalar(-0.3))[0] - oracle) <= 1e-4);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const Weights w = dltest::random_vector(rng, 8, 2.0);
    const auto s = ProxSpec::l1(0.7, 1.3);
    CHECK((prox_via_moreau(s, w) - prox(s, w)).norm() <= 1e-8);
  }
  CHECK_THROWS_AS(prox_via_moreau(ProxSpec::sq_l2(1.0), scalar(1.0)), Unsupported);
}

TEST_CASE("moreau identity for the group norm") {
  std::mt19937_64 rng(9);
  const auto spec = ProxSpec::group_l2({{0, 1, 2}, {3, 4}}, 0.9, 0.8);
  for (int k = 0; k < 50; ++k) {
    const Weights w = dltest::random_vector(rng, 5, 2.0);
    CHECK((prox_via_moreau(spec, w) - prox(spec, w)).norm() <= 1e-8);
  }
}

TEST_CASE("nonexpansiveness on random pairs") {
  std::mt19937_64 rng(7);
  const std::vector<ProxSpec> specs = {
      ProxSpec::l1(0.5, 1.0), ProxSpec::sq_l2(1.5, 0.7), ProxSpec::l2_ball(2.0),
      ProxSpec::group_l2({{0, 1}, {2, 3}, {4, 5}}, 0.8, 1.2)};
  for (const auto& spec : specs) {
    for (int k = 0; k < 100; ++k) {
      const Weights u = dltest::random_vector(rng, 6, 3.0);
      const Weights v = dltest::random_vector(rng, 6, 3.0);
      CHECK((prox(spec, u) - prox(spec, v)).norm() <= (u - v).norm() + 1e-12);
    }
  }
}

TEST_CASE("scalar separable solver meets its optimality residual") {
  // g(z) = log(1 + exp(z)), a smooth convex penalty.
  ScalarFunction g;
  g.value = [](double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); };
  g.deriv = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  g.second = [](double z) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 - s);
  };
  const auto spec = ProxSpec::scalar_separable(g, 2.0);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const Weights w = dltest::random_vector(rng, 4, 3.0);
    const Weights z = prox(spec, w);
    for (int j = 0; j < 4; ++j) {
      const double residual = g.deriv(z[j]) + (z[j] - w[j]) / 2.0;
      CHECK(std::abs(residual) <= 1e-10);
    }
    // The grid oracle cannot beat the solver by more than its resolution.
    for (int j = 0; j < 4; ++j) {
      const double direct = 2.0 * g.value(z[j]) + 0.5 * (z[j] - w[j]) * (z[j] - w[j]);
      const double grid_z = grid_prox(g.value, 2.0, w[j]);
      const double grid_val = 2.0 * g.value(grid_z) + 0.5 * (grid_z - w[j]) * (grid_z - w[j]);
      CHECK(direct <= grid_val + 1e-8);
    }
  }
}

TEST_CASE("gradient mapping") {
  const auto quad = ProblemInstance::quadratic(Matrix::Identity(2, 2), Weights::Zero(2));
  Weights w(2);
  w << 2.0, 0.0;
  // Zero regularizer reduces to the gradient.
  const Weights gm = gradient_mapping(quad, ProxSpec::zero(), w, 0.7);
  CHECK((gm - quad.grad(w)).norm() <= 1e-15);

  // Hand-evaluated soft-threshold chain.
  const auto inner = ProblemInstance::quadratic(Matrix::Identity(1, 1), Weights::Zero(1));
  const auto comp = ProblemInstance::composite_l1(inner, 1.0);
  Weights w3(1);
  w3 << 3.0;
  const Weights g3 = gradient_mapping(comp, ProxSpec::l1(1.0), w3, 1.0);
  CHECK(g3[0] == doctest::Approx(3.0));

  // Fixed point of the proximal-gradient step maps to zero.
  const auto& ws = comp.constants().w_star;
  REQUIRE(ws.has_value());
  CHECK(gradient_mapping(comp, ProxSpec::l1(1.0), *ws, 1.0 / comp.constants().L).norm() <=
        1e-10);

  CHECK_THROWS_AS(gradient_mapping(quad, ProxSpec::zero(), w, 0.0), InvalidArgument);
}

TEST_CASE("grid-oracle dominance for scalar shrinkage") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int k = 0; k < 25; ++k) {
    const double w = u(rng);
    {
      const auto spec = ProxSpec::l1(0.8, 1.1);
      const double z = prox(spec, scalar(w))[0];
      const auto obj = [&](double x) {
        return 1.1 * 0.8 * std::abs(x) + 0.5 * (x - w) * (x - w);
      };
      const double gz = grid_prox([](double x) { return 0.8 * std::abs(x); }, 1.1, w);
      CHECK(obj(z) <= obj(gz) + 1e-8);
    }
    {
      const auto spec = ProxSpec::sq_l2(1.4, 0.9);
      const double z = prox(spec, scalar(w))[0];
      const auto obj = [&](double x) {
        return 0.9 * 0.7 * x * x + 0.5 * (x - w) * (x - w);
      };
      const double gz = grid_prox([](double x) { return 0.7 * x * x; }, 0.9, w);
      CHECK(obj(z) <= obj(gz) + 1e-8);
    }
  }
}

TEST_CASE("prox validation errors") {
  Weights lo(2), hi(2);
  lo << 1.0, 0.0;
  hi << 0.0, 1.0;
  CHECK_THROWS_AS(prox(ProxSpec::box(lo, hi), Weights::Zero(2)), InvalidArgument);
  CHECK_THROWS_AS(prox(ProxSpec::l1(1.0), 0.0, Weights::Zero(2)), InvalidArgument);
  CHECK_THROWS_AS(prox(ProxSpec::group_l2({{0}}, 1.0), Weights::Zero(2)),
                  InvalidArgument);
}

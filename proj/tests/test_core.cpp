#include "support.hpp"

#include "prr/problems.hpp"
#include "prr/regularizers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace prr;
using prr::test::vec;
using Vec = Vector<double>;

namespace {

std::vector<Regularizer<double>> shipped_regularizers(Eigen::Index n) {
  Vec lo = Vec::Constant(n, -0.5), hi = Vec::Constant(n, 0.75);
  lo(0) = -std::numeric_limits<double>::infinity();
  return {zero_regularizer<double>(), nonnegative_orthant<double>(), box<double>(lo, hi),
          soft_threshold<double>(0.3)};
}

Vec random_point(Rng &rng, Eigen::Index n, double scale) {
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.uniform(-scale, scale);
  return x;
}

// Central differences of a scalar function.
Vec numeric_gradient(const std::function<double(const Vec &)> &f, const Vec &x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

} // namespace

TEST_CASE("extended reals keep infinity as a state") {
  const auto inf = Extended<double>::infinity();
  CHECK(inf.is_infinite());
  CHECK(std::isinf(inf.as_scalar()));
  CHECK_THROWS_AS(inf.value(), UsageError);
  CHECK(Extended<double>(1.0) < inf);
  CHECK_FALSE(inf < inf);
  CHECK(inf <= inf);
  CHECK((Extended<double>(1.0) + inf).is_infinite());
  CHECK((Extended<double>(1.0) + Extended<double>(2.0)) == Extended<double>(3.0));
}

TEST_CASE("eval_phi examples") {
  const auto q = test::quadratic_problem();
  CHECK(eval_phi(q, vec({2.0})).value() == 2.0);

  auto ind = test::problem_of("ind", {test::half_square()}, nonnegative_orthant<double>(), 1);
  CHECK(eval_phi(ind, vec({-1.0})).is_infinite());

  const auto z = test::zero_problem(3);
  CHECK(eval_phi(z, vec({4.0, -7.0, 1e6})).value() == 0.0);

  CHECK_THROWS_AS(eval_phi(q, vec({1.0, 2.0})), UsageError);
}

TEST_CASE("field_sum examples") {
  auto cancel = test::problem_of("cancel", {test::linear(1.0, 1), test::linear(-1.0, 1)},
                                 zero_regularizer<double>(), 1);
  for (double x : {-3.0, 0.0, 2.5}) CHECK(field_sum(cancel, vec({x}))(0) == 0.0);

  CHECK(field_sum(test::quadratic_problem(), vec({3.0}))(0) == 3.0);

  const auto nmf = make_lp_nmf(NmfInstance<double>::single_block(Matrix<double>::Constant(1, 1, 2.0), 1, 2.0));
  const Vec g = field_sum(nmf, vec({1.0, 1.0}));
  CHECK(g(0) == -1.0);
  CHECK(g(1) == -1.0);
  // finite differences of (XY - M)^2 / 2
  const Vec fd = numeric_gradient([](const Vec &z) { return 0.5 * std::pow(z(0) * z(1) - 2, 2); }, vec({1.0, 1.0}), 1e-6);
  CHECK((fd - g).norm() < 1e-8);
}

TEST_CASE("field_sum reports the offending component") {
  ComponentOracle<double> bad;
  bad.value = [](const Vec &) { return 0.0; };
  bad.field = [](const Vec &) { return vec({std::numeric_limits<double>::quiet_NaN()}); };
  auto p = test::problem_of("bad", {test::linear(1.0, 1), bad}, zero_regularizer<double>(), 1);
  try {
    field_sum(p, vec({0.0}));
    FAIL("expected NumericError");
  } catch (const NumericError &e) {
    CHECK(e.component == 1);
  }
}

TEST_CASE("problem validation") {
  CompositeProblem<double> p;
  p.name = "empty";
  p.dimension = 1;
  p.regularizer = zero_regularizer<double>();
  CHECK_THROWS_AS(p.validate(), UsageError);
}

TEST_CASE("prox is nonexpansive and lands in the domain") {
  Rng rng(11);
  for (Eigen::Index n : {1, 3, 6}) {
    for (const auto &g : shipped_regularizers(n)) {
      CAPTURE(g.name);
      for (int t = 0; t < 1000; ++t) {
        const Vec x = random_point(rng, n, 3.0), y = random_point(rng, n, 3.0);
        const double alpha = 1.0 - rng.uniform(); // (0, 1]
        const Vec px = g.prox(alpha, x), py = g.prox(alpha, y);
        CHECK(g.in_domain(px));
        CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("regularizer value is finite exactly on the domain") {
  Rng rng(12);
  const Eigen::Index n = 3;
  for (const auto &g : shipped_regularizers(n)) {
    CAPTURE(g.name);
    for (int t = 0; t < 1000; ++t) {
      const Vec x = random_point(rng, n, 2.0);
      CHECK(g.value(x).is_finite() == g.in_domain(x));
    }
  }
}

TEST_CASE("eval_phi is infinite exactly off the domain") {
  Rng rng(13);
  for (const auto &g : shipped_regularizers(2)) {
    auto p = test::problem_of("q", {test::half_square()}, g, 2);
    for (int t = 0; t < 1000; ++t) {
      const Vec x = random_point(rng, 2, 2.0);
      CHECK(eval_phi(p, x).is_infinite() == !g.in_domain(x));
    }
  }
}

TEST_CASE("normal residuals against brute-force projection") {
  // d(0, v + dg(x)) for the soft threshold: dg(x)_i = lambda sign(x_i) or [-lambda, lambda].
  const auto g = soft_threshold<double>(0.5);
  CHECK(g.normal_residual(vec({1.0}), vec({-0.5})) == doctest::Approx(0.0));
  CHECK(g.normal_residual(vec({0.0}), vec({0.2})) == doctest::Approx(0.0));
  CHECK(g.normal_residual(vec({0.0}), vec({2.0})) == doctest::Approx(1.5));
  CHECK(g.normal_residual(vec({-1.0}), vec({2.0})) == doctest::Approx(1.5));

  Vec lo = vec({0.0, -1.0}), hi = vec({1.0, -1.0});
  const auto b = box<double>(lo, hi);
  CHECK(b.normal_residual(vec({0.0, -1.0}), vec({3.0, 7.0})) == doctest::Approx(0.0));
  CHECK(b.normal_residual(vec({0.0, -1.0}), vec({-3.0, 7.0})) == doctest::Approx(3.0));
  CHECK(b.normal_residual(vec({1.0, -1.0}), vec({-3.0, 7.0})) == doctest::Approx(0.0));
  CHECK(b.normal_residual(vec({0.5, -1.0}), vec({-3.0, 7.0})) == doctest::Approx(3.0));
}

TEST_CASE("smooth oracles agree with finite differences") {
  Rng rng(14);
  std::vector<CompositeProblem<double>> probs;
  for (const char *name : {"quadratic", "quartic", "exp"}) probs.push_back(make_toy<double>(name));
  Matrix<double> M(2, 3);
  M << 1.0, 0.5, 2.0, 0.3, 1.5, 0.7;
  for (double p : {2.0, 3.0, 4.0}) {
    probs.push_back(make_lp_nmf(NmfInstance<double>::row_blocks(M, 2, p)));
    probs.push_back(make_lp_nmf(NmfInstance<double>::entrywise(M, 1, p)));
  }
  for (const auto &prob : probs) {
    CAPTURE(prob.name);
    for (const auto &c : prob.components) {
      REQUIRE(c.smooth);
      for (int t = 0; t < 100; ++t) {
        Vec x(prob.dimension);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(0.1, 1.5);
        const Vec g = c.field(x);
        const Vec fd = numeric_gradient(c.value, x, 1e-6);
        CHECK((fd - g).norm() <= 1e-4 * std::max(1.0, g.norm()));
      }
    }
  }
}

TEST_CASE("estimate_constants examples") {
  const auto q = test::quadratic_problem();
  const std::vector<Vec> centers{vec({0.0})};
  const auto few = estimate_constants(q, centers, 1.0, 10, 5);
  const auto many = estimate_constants(q, centers, 1.0, 20000, 5);
  CHECK(many.L <= 1.0);
  CHECK(many.L > 0.999);
  CHECK(few.L <= many.L);
  REQUIRE(many.M);
  CHECK(*many.M == doctest::Approx(1.0).epsilon(1e-9));

  auto ind = test::problem_of("ind", {test::half_square()}, nonnegative_orthant<double>(), 2);
  CHECK(estimate_constants(ind, {vec({1.0, 1.0})}, 1.0, 500, 3).L_g == 0.0);

  auto lin = test::problem_of("lin", {test::linear(5.0, 1)}, zero_regularizer<double>(), 1);
  for (double r : {0.01, 1.0, 100.0}) {
    const auto e = estimate_constants(lin, {vec({0.0})}, r, 300, 9);
    CHECK(e.L == doctest::Approx(5.0));
    REQUIRE(e.M);
    CHECK(*e.M == 0.0);
  }

  // L_g of a soft threshold is lambda * sqrt(n) away from the axes.
  auto l1 = test::problem_of("l1", {test::half_square()}, soft_threshold<double>(0.5), 2);
  CHECK(estimate_constants(l1, {vec({2.0, 2.0})}, 0.5, 50, 1).L_g == doctest::Approx(0.5 * std::sqrt(2.0)));
}

TEST_CASE("estimate_constants is reproducible and monotone in the sample count") {
  Matrix<double> M(2, 2);
  M << 1.0, 0.5, 0.5, 0.25;
  const auto p = make_lp_nmf(NmfInstance<double>::entrywise(M, 1, 2.0));
  const std::vector<Vec> centers{vec({0.5, 0.6, 0.7, 0.8}), vec({0.2, 0.1, 0.3, 0.9})};
  const auto a = estimate_constants(p, centers, 1.0, 300, 77);
  const auto b = estimate_constants(p, centers, 1.0, 300, 77);
  CHECK(a.L == b.L);
  CHECK(*a.M == *b.M);
  CHECK(a.L_g == b.L_g);
  double prev_L = 0, prev_M = 0;
  for (std::size_t s : {0, 10, 50, 300, 1000}) {
    const auto e = estimate_constants(p, centers, 1.0, s, 77);
    CHECK(e.L >= prev_L);
    CHECK(*e.M >= prev_M);
    prev_L = e.L;
    prev_M = *e.M;
  }
  // nonsmooth problems record no M
  const auto nonsmooth = make_lp_nmf(NmfInstance<double>::entrywise(M, 1, 1.0));
  CHECK_FALSE(estimate_constants(nonsmooth, centers, 1.0, 50, 1).M.has_value());
}

TEST_CASE("estimate_constants error paths") {
  const auto q = test::quadratic_problem();
  CHECK_THROWS_AS(estimate_constants(q, {}, 1.0, 10, 0), UsageError);
  CHECK_THROWS_AS(estimate_constants(q, {vec({0.0})}, 0.0, 10, 0), UsageError);
  Vec lo = vec({10.0}), hi = vec({11.0});
  auto far = test::problem_of("far", {test::half_square()}, box<double>(lo, hi), 1);
  CHECK_THROWS_AS(estimate_constants(far, {vec({0.0})}, 1.0, 100, 0), DomainSamplingError);
}

TEST_CASE("seed splitting is stable") {
  // splitmix64 reference values for seed 0 (first output of the generator)
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(mix(1, 0) != mix(1, 1));
  CHECK(mix(1, 0) != mix(2, 0));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("ball sampling stays in the ball") {
  Rng rng(3);
  const Vec c = vec({1.0, -2.0, 0.5});
  for (int i = 0; i < 1000; ++i) CHECK((rng.in_ball(c, 0.25) - c).norm() <= 0.25);
}

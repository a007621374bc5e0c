#pragma once

// Small hand-built problems shared by the test suites.

#include "prr/core.hpp"
#include "prr/regularizers.hpp"

#include <string>

namespace prr::test {

using Vec = Vector<double>;

inline Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

// f(x) = slope * sum(x)
inline ComponentOracle<double> linear(double slope, Eigen::Index n) {
  ComponentOracle<double> c;
  c.value = [slope](const Vec &x) { return slope * x.sum(); };
  c.field = [slope, n](const Vec &) { return Vec(Vec::Constant(n, slope)); };
  c.smooth = true;
  return c;
}

// f(x) = |x|^2 / 2
inline ComponentOracle<double> half_square() {
  ComponentOracle<double> c;
  c.value = [](const Vec &x) { return x.squaredNorm() / 2; };
  c.field = [](const Vec &x) { return Vec(x); };
  c.smooth = true;
  return c;
}

inline CompositeProblem<double> problem_of(std::string name, std::vector<ComponentOracle<double>> comps,
                                           Regularizer<double> g, Eigen::Index n) {
  CompositeProblem<double> p;
  p.name = std::move(name);
  p.components = std::move(comps);
  p.regularizer = std::move(g);
  p.dimension = n;
  return p;
}

inline CompositeProblem<double> zero_problem(Eigen::Index n, std::size_t N = 1) {
  return problem_of("zero", std::vector<ComponentOracle<double>>(N, linear(0.0, n)), zero_regularizer<double>(), n);
}

inline CompositeProblem<double> quadratic_problem() {
  return problem_of("quadratic", {half_square()}, zero_regularizer<double>(), 1);
}

} // namespace prr::test

// Acceptance suite: one PASS/FAIL line per criterion. With an argument N only
// criterion N runs. Exit status is nonzero when any selected criterion fails.

#include "prr/flow.hpp"
#include "prr/nmf_invariants.hpp"
#include "prr/problems.hpp"
#include "prr/prr.hpp"
#include "prr/regularizers.hpp"
#include "prr/stationarity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace prr;
using Vec = Vector<double>;

namespace {

// Tolerances and budgets, pinned.
constexpr double kDisplacementTol = 1e-10;
constexpr double kSlack = 1.05;
constexpr double kTrackingMax = 1e-2;
constexpr double kEnergyGapMax = 1e-3;
constexpr double kEnergyHalvingRatio = 0.75;
constexpr double kDriftMax = 1e-3;
constexpr double kDriftHalvingRatio = 0.5;
constexpr double kDeterministicSlopeMax = -0.9;
constexpr double kReshuffledSlopeMax = -0.15;
constexpr double kReachEpsilon = 0.1, kReachDelta = 0.05;
constexpr double kSigmas = 3.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

Matrix<double> m22(double a, double b, double c, double d) {
  Matrix<double> M(2, 2);
  M << a, b, c, d;
  return M;
}

const Matrix<double> M0 = m22(1.0, 0.5, 0.5, 0.25);
const Matrix<double> M1 = m22(2.0, 1.0, 0.5, 1.5);
const Vec kStart = vec({0.9, 0.4, 0.7, 0.3});

RunConfig<double> constant_run(double alpha, std::size_t epochs, std::uint64_t seed) {
  RunConfig<double> c;
  c.schedule = StepSchedule<double>::constant(alpha);
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

const CheckLedger<double> *find_ledger(const RunTrace<double> &t, const std::string &name) {
  for (const auto &l : t.ledger)
    if (l.name == name) return &l;
  return nullptr;
}

std::vector<double> stationarity_column(const RunTrace<double> &t) {
  std::vector<double> out;
  for (const auto &r : t.rows) out.push_back(r.stationarity.value_or(std::nan("")));
  return out;
}

double balance_drift(const FlowTrace<double> &f) {
  double drift = 0;
  for (std::size_t p = 0; p < f.probe_names.size(); ++p) {
    if (f.probe_names[p].rfind("balance[", 0) != 0) continue;
    for (const auto &row : f.probes) drift = std::max(drift, std::abs(row[p] - f.probes.front()[p]));
  }
  return drift;
}

double track(const CompositeProblem<double> &p, const Vec &x0, double alpha, double h, double T) {
  const auto K = static_cast<std::size_t>(std::floor(T / alpha * (1 + 1e-12)));
  const auto run_trace = run(p, x0, constant_run(alpha, K, 0));
  return tracking_compare(run_trace, integrate(p, x0, h, T)).sup_dev;
}

// 1. prox displacement
Outcome criterion1() {
  Rng rng(1001);
  const Eigen::Index n = 4;
  std::vector<Regularizer<double>> regs{nonnegative_orthant<double>(), soft_threshold<double>(0.3),
                                        box<double>(Vec::Constant(n, -1.0), Vec::Constant(n, 2.0))};
  double worst = -1e300;
  std::size_t violations = 0;
  for (const auto &g : regs) {
    for (int t = 0; t < 10000; ++t) {
      Vec x(n), d(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        if (g.name == "box") x(i) = u < 0.2 ? -1.0 : u < 0.4 ? 2.0 : rng.uniform(-1, 2);
        else x(i) = u < 0.4 ? 0.0 : rng.uniform(g.name == "nonnegative_orthant" ? 0.0 : -2.0, 2.0);
        d(i) = rng.normal() * std::pow(10.0, rng.uniform(-2, 1));
      }
      const double alpha = std::pow(10.0, rng.uniform(-3, 1));
      const double lhs = (g.prox(alpha, Vec(x - alpha * d)) - x).norm() / alpha;
      const double rhs = 2 * d.norm() + 2 * g.normal_residual(x, Vec::Zero(n));
      worst = std::max(worst, lhs - rhs);
      if (!(lhs <= rhs + kDisplacementTol)) ++violations;
    }
  }
  return {violations == 0, "30000 triples, violations=" + std::to_string(violations) +
                               fmt(", max(lhs-rhs)=%.3g", worst)};
}

RunTrace<double> nmf_descent_run() {
  const auto p = make_lp_nmf(NmfInstance<double>::entrywise(M0, 1, 2.0));
  auto c = constant_run(1e-3, 100, 8);
  c.check_level = CheckLevel::full;
  c.slack = kSlack;
  return run(p, kStart, c);
}

// 2. step-length bound
Outcome criterion2() {
  auto q = constant_run(0.1, 100, 3);
  q.check_level = CheckLevel::full;
  q.slack = kSlack;
  const auto tq = run(make_toy<double>("quadratic"), vec({1.0}), q);
  const auto tn = nmf_descent_run();
  Outcome o;
  for (const auto *t : {&tq, &tn}) {
    const auto *l = find_ledger(*t, "step_bound");
    if (!l || !l->all_passed() || l->applicable_count() == 0) o.pass = false;
    o.detail += t->problem + " N=" + std::to_string(t->components) + ": " +
                (l ? std::to_string(l->applicable_count()) + " applicable, " + std::to_string(l->failures()) +
                         " failures"
                   : std::string("no ledger")) +
                "; ";
  }
  return o;
}

// 3. approximate descent
Outcome criterion3() {
  const auto t = nmf_descent_run();
  const auto *l = find_ledger(t, "descent");
  if (!l) return {false, "no descent ledger"};
  double margin = 1e300;
  for (const auto &e : l->entries) margin = std::min(margin, e.rhs - e.lhs);
  return {l->all_passed() && l->entries.size() == 100 && !l->indicative,
          std::to_string(l->entries.size()) + " epochs, failures=" + std::to_string(l->failures()) +
              fmt(", min(rhs-lhs)=%.3g", margin)};
}

// 4. tracking
Outcome criterion4() {
  const double h = 1e-4, T = 1;
  const auto q = make_toy<double>("quadratic");
  const double sup = track(q, vec({1.0}), 0.01, h, T);
  Outcome o{sup <= kTrackingMax, fmt("quadratic sup_dev(0.01)=%.4g", sup)};
  const auto one = make_lp_nmf(NmfInstance<double>::single_block(Matrix<double>::Constant(1, 1, 2.0), 1, 2.0));
  const std::vector<std::pair<const CompositeProblem<double> *, Vec>> cases{{&q, vec({1.0})},
                                                                           {&one, vec({1.5, 0.5})}};
  for (const auto &[p, x0] : cases) {
    double prev = 1e300;
    o.detail += "; " + p->name + ":";
    for (double a : {1e-1, 1e-2, 1e-3}) {
      const double s = track(*p, x0, a, h, T);
      if (!(s < prev)) o.pass = false;
      prev = s;
      o.detail += fmt(" %.3g", s);
    }
  }
  return o;
}

// 5. energy identity
Outcome criterion5() {
  const auto q = make_toy<double>("quadratic");
  const auto nmf = make_lp_nmf(NmfInstance<double>::row_blocks(M0, 1, 2.0));
  const double gq = energy_check(integrate(q, vec({1.0}), 1e-4, 1.0)).gap;
  Outcome o{gq <= kEnergyGapMax, fmt("quadratic gap(1e-4)=%.3g", gq)};
  const std::vector<std::pair<const CompositeProblem<double> *, Vec>> cases{{&q, vec({1.0})}, {&nmf, kStart}};
  for (const auto &[p, x0] : cases) {
    const double g1 = energy_check(integrate(*p, x0, 2e-4, 1.0)).gap;
    const double g2 = energy_check(integrate(*p, x0, 1e-4, 1.0)).gap;
    if (!(g2 <= kEnergyHalvingRatio * g1)) o.pass = false;
    o.detail += "; " + p->name + fmt(" gap ratio=%.4f", g2 / g1);
  }
  return o;
}

struct NmfFlowCase {
  std::string label;
  Matrix<double> M;
  double p;
};

std::vector<NmfFlowCase> nmf_flow_cases() {
  return {{"M0 p=1", M0, 1.0}, {"M0 p=2", M0, 2.0}, {"M1 p=1", M1, 1.0}, {"M1 p=2", M1, 2.0}};
}

// 6. balance law
Outcome criterion6() {
  Outcome o;
  for (const auto &c : nmf_flow_cases()) {
    const auto p = make_lp_nmf(NmfInstance<double>::row_blocks(c.M, 1, c.p));
    const double d1 = balance_drift(integrate(p, kStart, 1e-4, 1.0));
    const double d2 = balance_drift(integrate(p, kStart, 5e-5, 1.0));
    if (!(d1 <= kDriftMax) || !(d2 <= kDriftHalvingRatio * d1)) o.pass = false;
    o.detail += c.label + fmt(": drift=%.3g", d1) + fmt(" ratio=%.5f; ", d2 / d1);
  }
  return o;
}

// 7. product bound
Outcome criterion7() {
  Outcome o;
  for (const auto &c : nmf_flow_cases()) {
    const auto inst = NmfInstance<double>::row_blocks(c.M, 1, c.p);
    const auto pk = inst.packing();
    const double d = product_bound_constant<double>(pk.X(kStart), pk.Y(kStart), c.M, c.p);
    const auto f = integrate(make_lp_nmf(inst), kStart, 1e-4, 1.0);
    std::size_t violations = 0;
    double mx = 0;
    for (const auto &z : f.states) {
      const auto r = product_bound_probe(pk.X(z), pk.Y(z), d);
      violations += r.violations.size();
      mx = std::max(mx, r.max_product);
    }
    if (violations) o.pass = false;
    o.detail += c.label + fmt(": max=%.3g", mx) + fmt(" d=%.3g", d) + " violations=" + std::to_string(violations) +
                "; ";
  }
  return o;
}

Vec rate_start() {
  Vec x0(8);
  for (Eigen::Index i = 0; i < 8; ++i) x0(i) = 0.6 + 0.1 * static_cast<double>(i);
  return x0;
}

// 8. rate, N = 1
Outcome criterion8() {
  const auto p = make_lp_nmf(NmfInstance<double>::single_block(M0, 2, 2.0));
  const auto t = run(p, rate_start(), constant_run(0.1, 10000, 0));
  const double slope = rate_fit(stationarity_column(t), 100, 10000);
  return {slope <= kDeterministicSlopeMax, fmt("slope=%.4f", slope)};
}

// 9. rate, N = 4, beta = 0.75
Outcome criterion9() {
  const auto p = make_lp_nmf(NmfInstance<double>::entrywise(M0, 2, 2.0));
  std::vector<double> slopes;
  std::string detail = "slopes:";
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig<double> c;
    c.schedule = StepSchedule<double>::polynomial(0.05, 0.75);
    c.epochs = 10000;
    c.seed = mix(909, seed);
    slopes.push_back(rate_fit(stationarity_column(run(p, rate_start(), c)), 100, 10000));
    detail += fmt(" %.3f", slopes.back());
  }
  std::nth_element(slopes.begin(), slopes.begin() + 2, slopes.end());
  return {slopes[2] <= kReshuffledSlopeMax, detail + fmt("; median=%.4f", slopes[2])};
}

// 10. reachability
Outcome criterion10() {
  const auto abs = make_toy<double>("abs");
  Outcome o;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = run(abs, vec({1.0}), constant_run(0.01, 1000, seed));
    std::size_t hit = t.rows.size();
    for (std::size_t k = 0; k < t.rows.size() && hit == t.rows.size(); ++k)
      if (ball_check(abs, t.rows[k].x, kReachEpsilon, kReachDelta, 21, mix(seed, k)).verdict) hit = k;
    if (hit == t.rows.size()) o.pass = false;
    o.detail += (o.detail.empty() ? "first hit k:" : "") + std::string(" ") +
                (hit == t.rows.size() ? "none" : std::to_string(hit));
  }
  return o;
}

// 11. divergence counterexample
Outcome criterion11() {
  const auto quartic = make_toy<double>("quartic");
  Outcome o;
  try {
    run(quartic, vec({2.0}), constant_run(1.0, 5, 0));
    o = {false, "alpha=1 did not diverge"};
  } catch (const DivergenceError &e) {
    o = {e.epoch <= 5, "alpha=1 diverged at epoch " + std::to_string(e.epoch)};
  }
  try {
    const auto t = run(quartic, vec({2.0}), constant_run(1e-3, 10000, 0));
    o.detail += fmt("; alpha=1e-3 x_K=%.4g", t.rows.back().x(0));
  } catch (const DivergenceError &e) {
    o.pass = false;
    o.detail += "; alpha=1e-3 diverged at epoch " + std::to_string(e.epoch);
  }
  return o;
}

bool bit_identical(const RunTrace<double> &a, const RunTrace<double> &b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    const auto &x = a.rows[k].x, &y = b.rows[k].x;
    if (x.size() != y.size() || std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) != 0) return false;
    if (a.rows[k].permutation != b.rows[k].permutation) return false;
  }
  return true;
}

// 12. determinism and permutation law
Outcome criterion12() {
  Outcome o;
  const auto p = make_lp_nmf(NmfInstance<double>::entrywise(M1, 1, 1.0));
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto c = constant_run(0.01, 200, seed);
    if (!bit_identical(run(p, kStart, c), run(p, kStart, c))) o.pass = false;
  }
  o.detail = o.pass ? "reruns bit-identical" : "reruns differ";

  auto three = make_toy<double>("quadratic");
  three.components.resize(3, three.components.front());
  const std::size_t epochs = 10000;
  const auto t = run(three, vec({1.0}), constant_run(1e-6, epochs, 31337));
  std::map<std::vector<int>, std::size_t> counts;
  for (const auto &r : t.rows)
    if (!r.permutation.empty()) ++counts[r.permutation];
  const double expected = static_cast<double>(epochs) / 6;
  const double sigma = std::sqrt(static_cast<double>(epochs) * (1.0 / 6) * (5.0 / 6));
  double worst = 0;
  for (const auto &[perm, n] : counts) worst = std::max(worst, std::abs(static_cast<double>(n) - expected) / sigma);
  if (counts.size() != 6 || worst > kSigmas) o.pass = false;
  o.detail += "; " + std::to_string(counts.size()) + " permutations, max |z|=" + fmt("%.2f", worst);
  return o;
}

struct Criterion {
  int id;
  std::function<Outcome()> body;
  double budget_seconds; // 0: no runtime bound
};

} // namespace

int main(int argc, char **argv) {
  const std::vector<Criterion> all{
      {1, criterion1, 5},  {2, criterion2, 10}, {3, criterion3, 0},   {4, criterion4, 30},
      {5, criterion5, 0},  {6, criterion6, 0},  {7, criterion7, 0},   {8, criterion8, 60},
      {9, criterion9, 0},  {10, criterion10, 0}, {11, criterion11, 0}, {12, criterion12, 0},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  bool ok = true;
  for (const auto &c : all) {
    if (only && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_seconds);
    }
    std::printf("criterion %d: %s (%.2f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}

#include "prr/harness/cli.hpp"

#include "prr/flow.hpp"
#include "prr/harness/config.hpp"
#include "prr/harness/experiment.hpp"
#include "prr/harness/trace_io.hpp"
#include "prr/nmf_invariants.hpp"
#include "prr/stationarity.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace prr::harness {

namespace {

struct Failed {}; // a requested check failed; exit 1

struct Options {
  std::string config;
  KeyValues overrides;
  std::string out;
  std::string trace;
  std::string column = "residual_bound";
  std::size_t kmin = 1;
  std::optional<std::size_t> kmax;
  std::optional<double> max_slope;
  std::optional<std::size_t> threads;
};

void add_key(CLI::App *app, Options &o, const std::string &flag, const std::string &key, const std::string &help) {
  app->add_option_function<std::string>(
      flag, [&o, key](const std::string &v) { o.overrides.emplace_back(key, v); }, help);
}

void add_problem_options(CLI::App *app, Options &o) {
  app->add_option("--config", o.config, "Configuration file (flat key = value, or JSON)");
  add_key(app, o, "--problem", "problem.name", "toy:<name>, nmf:<1x1|2x2|2x2b>, nmf, sensing");
  add_key(app, o, "--matrix", "problem.matrix", "Matrix file for problem nmf");
  add_key(app, o, "--p", "problem.p", "Exponent of the lp NMF loss");
  add_key(app, o, "--rank", "problem.rank", "Factorization rank");
  add_key(app, o, "--split", "problem.split", "NMF component split: rows, entries, single");
  add_key(app, o, "--x0", "problem.x0", "Initial point, comma separated");
  add_key(app, o, "--seed", "seed", "Root seed");
  add_key(app, o, "--checks", "checks", "Comma-separated checks to enforce");
  add_key(app, o, "--slack", "slack", "Multiplicative slack on estimated constants");
  add_key(app, o, "--output-dir", "output_dir", "Directory for output files");
  app->add_option_function<std::vector<std::string>>(
      "--set",
      [&o](const std::vector<std::string> &kvs) {
        for (const auto &kv : kvs) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
          o.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        }
      },
      "Override any configuration key (key=value)");
}

void add_run_options(CLI::App *app, Options &o) {
  add_key(app, o, "--schedule", "schedule", "constant:A, poly:A:B[:G], horizon:T:K, geom:A:T, custom:a,b,...");
  add_key(app, o, "--preset", "schedule.preset", "Step regime to validate against: reach, horizon, rate");
  add_key(app, o, "--epochs", "epochs", "Number of epochs");
  add_key(app, o, "--permutation", "permutation", "random or cyclic");
}

ExperimentConfig load(const Options &o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  apply_settings(c, o.overrides);
  validate(c);
  return c;
}

std::filesystem::path output_path(const ExperimentConfig &c, const Options &o, const char *fallback) {
  if (!o.out.empty()) return o.out;
  return std::filesystem::path(c.output_dir) / fallback;
}

bool contains(const std::vector<std::string> &v, const char *s) { return std::find(v.begin(), v.end(), s) != v.end(); }

void report_ledgers(const Trace &t, std::ostream &out) {
  for (const auto &l : t.ledger)
    out << "ledger." << l.name << '=' << (l.all_passed() ? "pass" : "fail") << " (" << l.failures() << " failures, "
        << l.applicable_count() << " applicable)\n";
}

int cmd_run(const Options &o, std::ostream &out, std::ostream &err) {
  const auto c = load(o);
  const auto inst = make_instance(c.problem);
  const Trace t = run_experiment(c, inst, c.seed);
  const auto path = output_path(c, o, "trace.csv");
  if (path == "-") write_trace(t, out);
  else write_trace(t, path);
  const auto &last = t.rows.back();
  err << "epochs=" << t.epochs() << " phi_last=" << format_real(last.phi.as_scalar()) << '\n';
  report_ledgers(t, err);
  if (!requested_checks_pass(t, c.checks, err)) throw Failed{};
  return 0;
}

int cmd_flow(const Options &o, std::ostream &out, std::ostream &err) {
  const auto c = load(o);
  const auto inst = make_instance(c.problem);
  const auto flow = integrate(inst.problem, inst.x0, c.flow_h, c.flow_T);
  write_flow(flow, output_path(c, o, "flow.csv"));

  bool ok = true;
  const auto e = energy_check(flow);
  out << "energy.lhs=" << format_real(e.lhs) << "\nenergy.rhs=" << format_real(e.rhs)
      << "\nenergy.gap=" << format_real(e.gap) << '\n';
  if (contains(c.checks, "energy") && !(e.gap <= c.energy_tol)) {
    err << "check energy: FAIL (gap " << e.gap << " > " << c.energy_tol << ")\n";
    ok = false;
  }
  if (inst.problem.infimum_lower_bound) {
    const double bound = flow_length_bound(flow, *inst.problem.infimum_lower_bound);
    out << "length=" << format_real(flow.length.back()) << "\nlength.bound=" << format_real(bound) << '\n';
    if (contains(c.checks, "length") && !(flow.length.back() <= bound * (1 + 1e-9))) {
      err << "check length: FAIL\n";
      ok = false;
    }
  } else if (contains(c.checks, "length")) {
    throw UnsupportedCheckError("length check needs a known lower bound on Phi");
  }

  double drift = 0;
  bool any_balance = false;
  for (std::size_t p = 0; p < flow.probe_names.size(); ++p) {
    if (flow.probe_names[p].rfind("balance", 0) != 0) continue;
    any_balance = true;
    for (const auto &row : flow.probes) drift = std::max(drift, std::abs(row[p] - flow.probes.front()[p]));
  }
  if (any_balance) out << "balance.drift=" << format_real(drift) << '\n';
  if (contains(c.checks, "balance")) {
    if (!any_balance) throw UnsupportedCheckError("balance check needs an NMF problem");
    if (!(drift <= c.balance_tol)) {
      err << "check balance: FAIL (drift " << drift << " > " << c.balance_tol << ")\n";
      ok = false;
    }
  }
  if (inst.nmf) {
    const auto pk = inst.nmf->packing();
    const double d = product_bound_constant<double>(pk.X(inst.x0), pk.Y(inst.x0), inst.nmf->M, inst.nmf->p);
    std::size_t violations = 0;
    double max_product = 0;
    for (const auto &z : flow.states) {
      const auto rep = product_bound_probe(pk.X(z), pk.Y(z), d);
      violations += rep.violations.size();
      max_product = std::max(max_product, rep.max_product);
    }
    out << "product.bound=" << format_real(d) << "\nproduct.max=" << format_real(max_product)
        << "\nproduct.violations=" << violations << '\n';
    if (contains(c.checks, "product") && violations) {
      err << "check product: FAIL\n";
      ok = false;
    }
  } else if (contains(c.checks, "product")) {
    throw UnsupportedCheckError("product check needs an NMF problem");
  }
  if (!ok) throw Failed{};
  return 0;
}

int cmd_track(const Options &o, double alpha, std::ostream &out, std::ostream &err) {
  auto c = load(o);
  if (!(alpha > 0)) throw UsageError("--alpha must be positive");
  const auto inst = make_instance(c.problem);
  // constant steps covering [0, T]
  const auto K = static_cast<std::size_t>(std::floor(c.flow_T / alpha * (1 + 1e-12)));
  if (K < 1) throw UsageError("--alpha exceeds the horizon T");
  c.schedule = ScheduleSpec{};
  c.schedule.kind = "constant";
  c.schedule.alpha = alpha;
  c.epochs = K;
  const Trace t = run_experiment(c, inst, c.seed);
  const auto flow = integrate(inst.problem, inst.x0, c.flow_h, c.flow_T);
  const auto tracking = tracking_compare(t, flow);
  write_deviations(tracking, output_path(c, o, "deviations.csv"));
  out << "sup_dev=" << format_real(tracking.sup_dev) << '\n';
  if (!flow.unique) err << "note: the flow may not be unique; deviation is against the selected solution\n";
  if (c.max_dev >= 0 && !(tracking.sup_dev <= c.max_dev)) {
    err << "check tracking: FAIL (sup_dev " << tracking.sup_dev << " > " << c.max_dev << ")\n";
    throw Failed{};
  }
  return 0;
}

int cmd_check(const Options &o, std::ostream &out, std::ostream &err) {
  auto c = load(o);
  const auto inst = make_instance(c.problem);
  Trace stored = read_trace(std::filesystem::path(o.trace));
  if (c.checks.empty()) {
    c.checks.push_back("step_bound");
    if (inst.problem.all_smooth()) c.checks.push_back("descent");
  }
  const Trace t = replay(std::move(stored), inst, c);
  report_ledgers(t, out);
  if (!requested_checks_pass(t, c.checks, err)) throw Failed{};
  return 0;
}

int cmd_rate(const Options &o, std::ostream &out, std::ostream &err) {
  const Trace t = read_trace(std::filesystem::path(o.trace));
  std::vector<double> values;
  if (o.column == "residual_bound" || o.column == "step_norm") {
    for (const auto &r : t.rows) {
      const auto &v = o.column == "residual_bound" ? r.residual_bound : r.step_norm;
      if (v) values.push_back(*v);
    }
  } else if (o.column == "stationarity") {
    const auto c = load(o);
    const auto inst = make_instance(c.problem);
    for (const auto &r : t.rows) {
      const auto s = stationarity_residual(inst.problem, r.x);
      if (!s) throw UnsupportedCheckError("stationarity column needs a smooth problem with an exact residual");
      values.push_back(*s);
    }
  } else {
    throw UsageError("--column must be residual_bound, step_norm or stationarity");
  }
  if (values.size() < 3) throw UsageError("rate: the trace has too few values");
  const std::size_t kmax = o.kmax.value_or(values.size() - 1);
  const double slope = rate_fit(values, o.kmin, kmax);
  out << "slope=" << format_real(slope) << '\n';
  if (o.max_slope && !(slope <= *o.max_slope)) {
    err << "check rate: FAIL (slope " << slope << " > " << *o.max_slope << ")\n";
    throw Failed{};
  }
  return 0;
}

int cmd_sweep(const Options &o, std::ostream &out, std::ostream &err) {
  const auto c = load(o);
  std::size_t threads = sweep_threads();
  if (o.threads) threads = std::min(threads, std::max<std::size_t>(1, *o.threads));
  const auto items = sweep(c, threads);
  const std::filesystem::path dir = c.output_dir;
  std::ostringstream summary;
  summary << "alpha_index,alpha,replicate,seed,status,phi_last,min_residual_bound,checks\n";
  bool ok = true;
  for (const auto &it : items) {
    summary << it.alpha_index << ',' << format_real(it.alpha) << ',' << it.replicate << ',' << it.seed << ',';
    if (!it.error.empty()) {
      err << "replicate " << it.replicate << " at alpha " << it.alpha << ": " << it.error << '\n';
      summary << "error,,,fail\n";
      ok = false;
      continue;
    }
    write_trace(it.trace, dir / ("sweep_a" + std::to_string(it.alpha_index) + "_r" + std::to_string(it.replicate) +
                                 ".csv"));
    double min_res = std::numeric_limits<double>::infinity();
    for (const auto &r : it.trace.rows)
      if (r.residual_bound) min_res = std::min(min_res, *r.residual_bound);
    std::ostringstream diag;
    const bool pass = requested_checks_pass(it.trace, c.checks, diag);
    if (!pass) err << diag.str();
    ok = ok && pass;
    summary << "ok," << format_real(it.trace.rows.back().phi.as_scalar()) << ','
            << (std::isinf(min_res) ? std::string() : format_real(min_res)) << ',' << (pass ? "pass" : "fail") << '\n';
  }
  write_atomically(dir / "sweep_summary.csv", summary.str());
  out << "runs=" << items.size() << " threads=" << threads << '\n';
  if (!ok) throw Failed{};
  return 0;
}

} // namespace

int cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Proximal random reshuffling: runs, reference flows and inequality checks", "prr"};
  app.set_help_flag("--help", "Print this help message and exit"); // -h would clash with --h
  app.require_subcommand(1);
  Options o;
  double alpha = 0;

  auto *run = app.add_subcommand("run", "Run the method and write the trace CSV");
  add_problem_options(run, o);
  add_run_options(run, o);
  run->add_option("--out", o.out, "Trace file ('-' for standard output)");

  auto *flow = app.add_subcommand("flow", "Integrate the reference flow");
  add_problem_options(flow, o);
  add_key(flow, o, "--h", "flow.h", "Integrator step");
  add_key(flow, o, "--T", "flow.T", "Horizon");
  flow->add_option("--out", o.out, "Flow table file");

  auto *track = app.add_subcommand("track", "Compare iterates with the flow at matching times");
  add_problem_options(track, o);
  add_key(track, o, "--h", "flow.h", "Integrator step");
  add_key(track, o, "--T", "flow.T", "Horizon");
  add_key(track, o, "--max-dev", "track.max_dev", "Fail when the sup deviation exceeds this");
  track->add_option("--alpha", alpha, "Constant step")->required();
  track->add_option("--out", o.out, "Deviation table file");

  auto *check = app.add_subcommand("check", "Replay inequality checks on a stored trace");
  add_problem_options(check, o);
  check->add_option("--trace", o.trace, "Trace CSV")->required();

  auto *rate = app.add_subcommand("rate", "Fit the running-minimum decay slope of a trace column");
  add_problem_options(rate, o);
  rate->add_option("--trace", o.trace, "Trace CSV")->required();
  rate->add_option("--column", o.column, "residual_bound, step_norm or stationarity");
  rate->add_option("--kmin", o.kmin, "First index of the fit window");
  rate->add_option("--kmax", o.kmax, "Last index of the fit window");
  rate->add_option("--max-slope", o.max_slope, "Fail when the slope exceeds this");

  auto *sw = app.add_subcommand("sweep", "Seeded replicas over a grid of step sizes");
  add_problem_options(sw, o);
  add_run_options(sw, o);
  add_key(sw, o, "--replicates", "sweep.replicates", "Replicas per grid point");
  add_key(sw, o, "--alphas", "sweep.alphas", "Comma-separated step sizes");
  sw->add_option("--threads", o.threads, "Thread count (capped by PRR_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(o, out, err);
    if (flow->parsed()) return cmd_flow(o, out, err);
    if (track->parsed()) return cmd_track(o, alpha, out, err);
    if (check->parsed()) return cmd_check(o, out, err);
    if (rate->parsed()) return cmd_rate(o, out, err);
    if (sw->parsed()) return cmd_sweep(o, out, err);
  } catch (const Failed &) {
    return 1;
  } catch (const DivergenceError &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

} // namespace prr::harness

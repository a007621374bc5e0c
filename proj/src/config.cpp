#include "prr/harness/config.hpp"

#include "prr/problems.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace prr::harness {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_real(const std::string &key, const std::string &v) {
  errno = 0;
  char *end = nullptr;
  const std::string t = trim(v);
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(d))
    throw UsageError(key + ": expected a finite real, got '" + v + "'");
  return d;
}

std::uint64_t to_uint(const std::string &key, const std::string &v) {
  const std::string t = trim(v);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
    throw UsageError(key + ": expected a nonnegative integer, got '" + v + "'");
  errno = 0;
  const auto u = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) throw UsageError(key + ": integer out of range");
  return u;
}

bool to_bool(const std::string &key, const std::string &v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw UsageError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_reals(const std::string &key, const std::string &v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto &part : split(v, ',')) out.push_back(to_real(key, part));
  return out;
}

void flatten(const nlohmann::json &j, const std::string &prefix, KeyValues &out) {
  if (j.is_object()) {
    for (const auto &[k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (j[i].is_structured()) throw UsageError(prefix + ": nested arrays are not supported");
      joined += (i ? "," : "") + (j[i].is_string() ? j[i].get<std::string>() : j[i].dump());
    }
    out.emplace_back(prefix, joined);
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else if (j.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
    out.emplace_back(prefix, buf);
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

Matrix<double> builtin_matrix(const std::string &preset) {
  if (preset == "1x1") return Matrix<double>::Constant(1, 1, 2.0);
  Matrix<double> M(2, 2);
  if (preset == "2x2") {
    M << 1.0, 0.5, 0.5, 0.25;
  } else if (preset == "2x2b") {
    M << 2.0, 1.0, 0.5, 1.5;
  } else {
    throw UsageError("unknown NMF preset '" + preset + "' (expected 1x1, 2x2 or 2x2b)");
  }
  return M;
}

} // namespace

std::vector<double> parse_list(const std::string &text) { return to_reals("list", text); }

KeyValues parse_key_values(const std::string &text) {
  KeyValues out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(0, std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(1, "JSON config must be an object");
    flatten(j, "", out);
    return out;
  }
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(lineno, "empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

ScheduleSpec parse_schedule(const std::string &spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  ScheduleSpec s;
  s.kind = kind;
  if (kind == "custom") {
    s.steps = to_reals("schedule", rest);
    if (s.steps.empty()) throw UsageError("schedule custom: no steps given");
    return s;
  }
  const auto parts = rest.empty() ? std::vector<std::string>{} : split(rest, ':');
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() < lo || parts.size() > hi)
      throw UsageError("schedule '" + spec + "': wrong number of parameters");
  };
  if (kind == "constant") {
    need(1, 1);
    s.alpha = to_real("schedule", parts[0]);
  } else if (kind == "poly") {
    need(2, 3);
    s.alpha = to_real("schedule", parts[0]);
    s.beta = to_real("schedule", parts[1]);
    if (parts.size() == 3) s.gamma = to_uint("schedule", parts[2]);
  } else if (kind == "horizon") {
    need(2, 2);
    s.T = to_real("schedule", parts[0]);
    s.K = to_uint("schedule", parts[1]);
  } else if (kind == "geom") {
    need(2, 2);
    s.alpha = to_real("schedule", parts[0]);
    s.T = to_real("schedule", parts[1]);
  } else {
    throw UsageError("unknown schedule kind '" + kind + "'");
  }
  return s;
}

void apply_settings(ExperimentConfig &c, const KeyValues &values) {
  for (const auto &[key, v] : values) {
    if (key == "problem.name" || key == "problem") c.problem.name = v;
    else if (key == "problem.matrix") c.problem.matrix = v;
    else if (key == "problem.p") c.problem.p = to_real(key, v);
    else if (key == "problem.rank") c.problem.rank = static_cast<long>(to_uint(key, v));
    else if (key == "problem.split") c.problem.split = v;
    else if (key == "problem.components") c.problem.components = to_uint(key, v);
    else if (key == "problem.m") c.problem.m = static_cast<long>(to_uint(key, v));
    else if (key == "problem.n") c.problem.n = static_cast<long>(to_uint(key, v));
    else if (key == "problem.instance_seed") c.problem.instance_seed = to_uint(key, v);
    else if (key == "problem.x0") c.problem.x0 = to_reals(key, v);
    else if (key == "schedule") {
      const auto preset = c.schedule.preset;
      c.schedule = parse_schedule(v);
      c.schedule.preset = preset;
    }
    else if (key == "schedule.kind") c.schedule.kind = v;
    else if (key == "schedule.alpha") c.schedule.alpha = to_real(key, v);
    else if (key == "schedule.beta") c.schedule.beta = to_real(key, v);
    else if (key == "schedule.gamma") c.schedule.gamma = to_uint(key, v);
    else if (key == "schedule.T") c.schedule.T = to_real(key, v);
    else if (key == "schedule.K") c.schedule.K = to_uint(key, v);
    else if (key == "schedule.steps") c.schedule.steps = to_reals(key, v);
    else if (key == "schedule.preset") c.schedule.preset = v;
    else if (key == "seed") c.seed = to_uint(key, v);
    else if (key == "epochs") c.epochs = to_uint(key, v);
    else if (key == "permutation") c.permutation = v;
    else if (key == "slack") c.slack = to_real(key, v);
    else if (key == "constants.radius") c.constants_radius = to_real(key, v);
    else if (key == "constants.samples") c.constants_samples = to_uint(key, v);
    else if (key == "record_inner") c.record_inner = to_bool(key, v);
    else if (key == "checks") {
      c.checks.clear();
      if (!trim(v).empty())
        for (const auto &s : split(v, ',')) c.checks.push_back(s);
    }
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "flow.h") c.flow_h = to_real(key, v);
    else if (key == "flow.T") c.flow_T = to_real(key, v);
    else if (key == "flow.energy_tol") c.energy_tol = to_real(key, v);
    else if (key == "flow.balance_tol") c.balance_tol = to_real(key, v);
    else if (key == "track.max_dev") c.max_dev = to_real(key, v);
    else if (key == "sweep.replicates") c.replicates = to_uint(key, v);
    else if (key == "sweep.alphas") c.alphas = to_reals(key, v);
    else throw UsageError("unknown configuration key '" + key + "'");
  }
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c;
  apply_settings(c, parse_key_values(ss.str()));
  return c;
}

void validate(const ExperimentConfig &c) {
  if (c.problem.name == "nmf") {
    if (c.problem.matrix.empty()) throw UsageError("problem nmf needs problem.matrix");
    if (!std::filesystem::exists(c.problem.matrix))
      throw UsageError("matrix file '" + c.problem.matrix + "' does not exist");
  }
  if (c.epochs < 1) throw UsageError("epochs must be at least 1");
  if (c.permutation != "random" && c.permutation != "cyclic")
    throw UsageError("permutation must be random or cyclic");
  if (!(c.slack >= 1)) throw UsageError("slack must be at least 1");
  if (!(c.flow_h > 0) || !(c.flow_T > 0)) throw UsageError("flow.h and flow.T must be positive");
  make_schedule(c.schedule); // parameter ranges

  const auto &kind = c.schedule.kind;
  const auto &preset = c.schedule.preset;
  if (preset.empty()) return;
  if (preset == "reach") {
    if (kind != "constant" && kind != "poly")
      throw UsageError("preset reach needs nonsummable steps (constant or poly), got " + kind);
  } else if (preset == "horizon") {
    if (kind != "horizon" && kind != "geom")
      throw UsageError("preset horizon needs a finite total time (horizon or geom), got " + kind);
  } else if (preset == "rate") {
    const bool poly_ok = kind == "poly" && c.schedule.beta > 0.5 && c.schedule.beta < 1;
    const bool constant_ok = kind == "constant" || (kind == "poly" && c.schedule.beta == 0);
    if (!poly_ok && !constant_ok)
      throw UsageError("preset rate needs poly with beta in (1/2, 1), or constant steps");
  } else {
    throw UsageError("unknown preset '" + preset + "'");
  }
}

StepSchedule<double> make_schedule(const ScheduleSpec &s) {
  if (s.kind == "constant") return StepSchedule<double>::constant(s.alpha);
  if (s.kind == "poly") return StepSchedule<double>::polynomial(s.alpha, s.beta, s.gamma);
  if (s.kind == "horizon") return StepSchedule<double>::constant_horizon(s.T, s.K);
  if (s.kind == "geom") return StepSchedule<double>::geometric_with_total(s.alpha, s.T);
  if (s.kind == "custom") return StepSchedule<double>::custom(s.steps);
  throw UsageError("unknown schedule kind '" + s.kind + "'");
}

Matrix<double> read_matrix(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open matrix file '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "empty matrix file");
  std::istringstream head(line);
  long m = 0, n = 0;
  std::string extra;
  if (!(head >> m >> n) || (head >> extra) || m < 1 || n < 1)
    throw ParseError(1, "expected 'm n' with positive sizes");
  Matrix<double> M(m, n);
  for (long i = 0; i < m; ++i) {
    if (!std::getline(in, line)) throw ParseError(lineno + 1, "missing matrix row");
    ++lineno;
    std::istringstream row(line);
    std::string tok;
    long j = 0;
    while (row >> tok) {
      if (j >= n) throw ParseError(lineno, "too many entries in row");
      errno = 0;
      char *end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError(lineno, "malformed entry '" + tok + "'");
      M(i, j++) = v;
    }
    if (j != n) throw ParseError(lineno, "expected " + std::to_string(n) + " entries");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) throw ParseError(lineno, "trailing content after the matrix");
  }
  return M;
}

Instance make_instance(const ProblemSpec &spec) {
  Instance out;
  const std::string &name = spec.name;
  if (name.rfind("toy:", 0) == 0) {
    const std::string toy = name.substr(4);
    out.problem = make_toy<double>(toy);
    out.x0 = Vector<double>::Constant(out.problem.dimension, 1.0);
    if (toy == "quartic") out.x0(0) = 2.0;
    if (toy == "exp") out.x0(0) = 0.0;
    if (toy == "absdiv") out.x0 << 1.0, 2.0;
  } else if (name == "nmf" || name.rfind("nmf:", 0) == 0) {
    const Matrix<double> M = name == "nmf" ? read_matrix(spec.matrix) : builtin_matrix(name.substr(4));
    NmfInstance<double> inst;
    if (spec.split == "rows") inst = NmfInstance<double>::row_blocks(M, spec.rank, spec.p);
    else if (spec.split == "entries") inst = NmfInstance<double>::entrywise(M, spec.rank, spec.p);
    else if (spec.split == "single") inst = NmfInstance<double>::single_block(M, spec.rank, spec.p);
    else throw UsageError("problem.split must be rows, entries or single");
    out.problem = make_lp_nmf(inst);
    out.nmf = inst;
    out.x0.resize(out.problem.dimension);
    if (name == "nmf:1x1" && spec.rank == 1) {
      out.x0 << 1.5, 0.5;
    } else {
      for (Eigen::Index i = 0; i < out.x0.size(); ++i) out.x0(i) = 0.5 + 0.1 * static_cast<double>(i % 5);
    }
  } else if (name == "sensing") {
    const auto inst = SensingInstance<double>::random(spec.components, spec.m, spec.n, spec.rank,
                                                      spec.instance_seed);
    out.problem = make_l1_sensing(inst);
    Rng rng(mix(spec.instance_seed, 1));
    out.x0.resize(out.problem.dimension);
    for (Eigen::Index i = 0; i < out.x0.size(); ++i) out.x0(i) = rng.normal();
  } else {
    throw UsageError("unknown problem '" + name + "'");
  }
  if (!spec.x0.empty()) {
    if (static_cast<Eigen::Index>(spec.x0.size()) != out.problem.dimension)
      throw UsageError("problem.x0 has " + std::to_string(spec.x0.size()) + " entries, problem dimension is " +
                       std::to_string(out.problem.dimension));
    out.x0 = Eigen::Map<const Vector<double>>(spec.x0.data(), out.problem.dimension);
  }
  return out;
}

} // namespace prr::harness

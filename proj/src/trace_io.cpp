#include "prr/harness/trace_io.hpp"

#include "prr/rng.hpp"

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace prr::harness {

namespace {

const char *const kFixedColumns[] = {"k",    "t_k",       "alpha_k",       "phi",
                                     "step_norm", "residual_bound", "feasible"};
constexpr std::size_t kFixedCount = 7;

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string &s, std::size_t line) {
  if (s.empty()) throw ParseError(line, "missing value");
  errno = 0;
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  // ERANGE on underflow still yields the correctly rounded subnormal
  if (end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(v)))
    throw ParseError(line, "malformed number '" + s + "'");
  return v;
}

std::optional<double> parse_optional(const std::string &s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  return parse_real(s, line);
}

std::string optional_field(const std::optional<double> &v) { return v ? format_real(*v) : std::string(); }

} // namespace

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace(const Trace &trace, std::ostream &out) {
  for (std::size_t c = 0; c < kFixedCount; ++c) out << (c ? "," : "") << kFixedColumns[c];
  for (const auto &p : trace.probe_names) out << ',' << p;
  const Eigen::Index n = trace.rows.empty() ? 0 : trace.rows.front().x.size();
  for (Eigen::Index i = 0; i < n; ++i) out << ",x[" << i << ']';
  out << '\n';
  for (const auto &r : trace.rows) {
    out << r.k << ',' << format_real(r.t) << ',' << optional_field(r.alpha) << ','
        << format_real(r.phi.as_scalar()) << ',' << optional_field(r.step_norm) << ','
        << optional_field(r.residual_bound) << ',' << (r.feasible ? 1 : 0);
    for (double p : r.probes) out << ',' << format_real(p);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out << ',' << format_real(r.x(i));
    out << '\n';
  }
}

void write_trace(const Trace &trace, const std::filesystem::path &path) {
  std::ostringstream os;
  write_trace(trace, os);
  write_atomically(path, os.str());
}

Trace read_trace(std::istream &in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "empty file (no header)");
  const auto header = split_csv(line);
  if (header.size() < kFixedCount) throw ParseError(1, "header has too few columns");
  for (std::size_t c = 0; c < kFixedCount; ++c)
    if (header[c] != kFixedColumns[c])
      throw ParseError(1, "expected column '" + std::string(kFixedColumns[c]) + "', found '" + header[c] + "'");
  std::vector<std::size_t> probe_cols, coord_cols;
  for (std::size_t c = kFixedCount; c < header.size(); ++c) {
    if (header[c].rfind("x[", 0) == 0) {
      coord_cols.push_back(c);
    } else {
      if (!coord_cols.empty()) throw ParseError(1, "probe column after coordinate columns");
      probe_cols.push_back(c);
      trace.probe_names.push_back(header[c]);
    }
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                   std::to_string(f.size()));
    EpochRecord<double> r;
    const double k = parse_real(f[0], lineno);
    if (k < 0 || k != std::floor(k)) throw ParseError(lineno, "k must be a nonnegative integer");
    r.k = static_cast<std::size_t>(k);
    r.t = parse_real(f[1], lineno);
    r.alpha = parse_optional(f[2], lineno);
    const double phi = parse_real(f[3], lineno);
    r.phi = std::isinf(phi) && phi > 0 ? Extended<double>::infinity() : Extended<double>(phi);
    r.step_norm = parse_optional(f[4], lineno);
    r.residual_bound = parse_optional(f[5], lineno);
    if (f[6] != "0" && f[6] != "1") throw ParseError(lineno, "feasible must be 0 or 1");
    r.feasible = f[6] == "1";
    for (std::size_t c : probe_cols) r.probes.push_back(parse_real(f[c], lineno));
    r.x.resize(static_cast<Eigen::Index>(coord_cols.size()));
    for (std::size_t i = 0; i < coord_cols.size(); ++i)
      r.x(static_cast<Eigen::Index>(i)) = parse_real(f[coord_cols[i]], lineno);
    if (r.k != trace.rows.size()) throw ParseError(lineno, "rows must be numbered 0, 1, 2, ...");
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

Trace read_trace(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open trace '" + path.string() + "'");
  return read_trace(in);
}

void write_flow(const FlowTrace<double> &flow, const std::filesystem::path &path) {
  std::ostringstream os;
  os << "j,s,phi,length";
  for (const auto &p : flow.probe_names) os << ',' << p;
  const Eigen::Index n = flow.states.empty() ? 0 : flow.states.front().size();
  for (Eigen::Index i = 0; i < n; ++i) os << ",x[" << i << ']';
  os << '\n';
  for (std::size_t j = 0; j < flow.states.size(); ++j) {
    os << j << ',' << format_real(flow.times[j]) << ',' << format_real(flow.phi[j].as_scalar()) << ','
       << format_real(flow.length[j]);
    for (double p : flow.probes[j]) os << ',' << format_real(p);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_real(flow.states[j](i));
    os << '\n';
  }
  write_atomically(path, os.str());
}

void write_deviations(const TrackingResult<double> &tracking, const std::filesystem::path &path) {
  std::ostringstream os;
  os << "t_k,deviation\n";
  for (const auto &[t, d] : tracking.deviations) os << format_real(t) << ',' << format_real(d) << '\n';
  write_atomically(path, os.str());
}

void write_atomically(const std::filesystem::path &path, const std::string &contents) {
  static std::atomic<std::uint64_t> counter{0};
  const auto salt = mix(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()),
                        counter.fetch_add(1) ^ std::hash<std::thread::id>{}(std::this_thread::get_id()));
  auto tmp = path;
  tmp += ".tmp." + std::to_string(salt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw UsageError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

} // namespace prr::harness

#pragma once

// Trace persistence. The run-trace CSV is the stable public schema:
//
//   k,t_k,alpha_k,phi,step_norm,residual_bound,feasible,<probe columns>,x[0],...,x[n-1]
//
// Reals are written with 17 significant digits (exact round trip), absent
// values as empty fields, +infinity as "inf". Columns after `feasible` whose
// name starts with "x[" are iterate coordinates; the others are probes.

#include "prr/flow.hpp"
#include "prr/prr.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace prr::harness {

using Trace = RunTrace<double>;

void write_trace(const Trace &trace, std::ostream &out);
void write_trace(const Trace &trace, const std::filesystem::path &path);

Trace read_trace(std::istream &in);
Trace read_trace(const std::filesystem::path &path);

// j,s,phi,length,<probe columns>,x[0],...
void write_flow(const FlowTrace<double> &flow, const std::filesystem::path &path);

// t_k,deviation
void write_deviations(const TrackingResult<double> &tracking, const std::filesystem::path &path);

/// Writes to a temporary sibling and renames it into place.
void write_atomically(const std::filesystem::path &path, const std::string &contents);

std::string format_real(double v);

} // namespace prr::harness

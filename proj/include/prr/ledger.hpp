#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace prr {

template <typename Scalar>
struct CheckEntry {
  std::size_t k = 0;
  bool applicable = true;
  bool passed = true;
  Scalar lhs = 0;
  Scalar rhs = 0;
};

/// Per-iteration pass/fail record of one named inequality.
template <typename Scalar>
struct CheckLedger {
  std::string name;
  std::vector<CheckEntry<Scalar>> entries;
  // The check ran with a surrogate that makes it stricter than the statement
  // it mirrors; failures are not counterexamples.
  bool indicative = false;

  CheckLedger() = default;
  explicit CheckLedger(std::string n) : name(std::move(n)) {}

  void add(std::size_t k, bool passed, Scalar lhs, Scalar rhs, bool applicable = true) {
    entries.push_back({k, applicable, passed || !applicable, lhs, rhs});
  }

  bool all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto &e) { return e.passed; });
  }

  std::size_t applicable_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto &e) { return e.applicable; }));
  }

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto &e) { return !e.passed; }));
  }

  std::vector<std::size_t> failed_indices() const {
    std::vector<std::size_t> out;
    for (const auto &e : entries)
      if (!e.passed) out.push_back(e.k);
    return out;
  }
};

} // namespace prr

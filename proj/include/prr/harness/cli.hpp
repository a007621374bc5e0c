#pragma once

#include <iosfwd>

namespace prr::harness {

/// Entry point of the prr command line tool. Returns the process exit code:
/// 0 when every requested check passes, 1 when one fails (or a run
/// diverges), 2 on configuration or input errors.
int cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace prr::harness

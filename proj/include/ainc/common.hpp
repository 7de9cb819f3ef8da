#pragma once

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ainc {

// Domain error for everything the library can reject: shape mismatches,
// bad configs, malformed files. The CLI maps these to exit code 2.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void msg_cat(std::ostringstream&) {}
template <class T, class... Rest>
void msg_cat(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  msg_cat(os, rest...);
}
}  // namespace detail

template <class... Parts>
std::string msg(const Parts&... parts) {
  std::ostringstream os;
  os.precision(17);
  detail::msg_cat(os, parts...);
  return os.str();
}

template <class... Parts>
[[noreturn]] void fail(const Parts&... parts) {
  throw Error(msg(parts...));
}

template <class... Parts>
void check(bool ok, const Parts&... parts) {
  if (!ok) fail(parts...);
}

// Shortest decimal form that round-trips a double exactly.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace log {
// Minimal stderr logger. AINC_QUIET=1 silences info/warn (errors still throw).
inline bool quiet() {
  static const bool q = [] {
    const char* e = std::getenv("AINC_QUIET");
    return e && e[0] == '1';
  }();
  return q;
}
template <class... Parts>
void warn(const Parts&... parts) {
  if (!quiet()) std::fprintf(stderr, "[warn] %s\n", msg(parts...).c_str());
}
template <class... Parts>
void info(const Parts&... parts) {
  if (!quiet()) std::fprintf(stderr, "[info] %s\n", msg(parts...).c_str());
}
}  // namespace log

}  // namespace ainc

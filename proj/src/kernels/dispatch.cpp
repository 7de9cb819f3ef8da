#include <cstdlib>
#include <cstring>

#include "ainc/common.hpp"
#include "ainc/kernels.hpp"

namespace ainc::kern {

namespace {

const Ops& select() {
  if (const char* req = std::getenv("AINC_KERNELS")) {
    if (std::strcmp(req, "scalar") == 0) return scalar_ops();
    if (std::strcmp(req, "avx2") == 0) {
      if (const Ops* p = avx2_ops()) return *p;
      ainc::log::warn("AINC_KERNELS=avx2 requested but AVX2 is unavailable; using scalar lane");
      return scalar_ops();
    }
    ainc::log::warn("AINC_KERNELS='", req, "' not recognized (scalar|avx2); auto-selecting");
  }
  if (const Ops* p = avx2_ops()) return *p;
  return scalar_ops();
}

}  // namespace

const Ops& ops() {
  static const Ops& selected = select();
  return selected;
}

}  // namespace ainc::kern

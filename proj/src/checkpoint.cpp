#include "ainc/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ainc/common.hpp"

namespace ainc {

namespace {

constexpr char kMagic[4] = {'A', 'I', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void put_u16(std::ofstream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  put_bytes(out, b, 2);
}
void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 4);
}
void put_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  put_bytes(out, b, 8);
}

struct Reader {
  std::ifstream in;
  std::string path;
  std::size_t offset = 0;

  void get_bytes(void* p, std::size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    check(static_cast<std::size_t>(in.gcount()) == n, "checkpoint '", path,
          "': truncated while reading ", what, " at byte ", offset);
    offset += n;
  }
  std::uint16_t get_u16(const char* what) {
    unsigned char b[2];
    get_bytes(b, 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t get_u32(const char* what) {
    unsigned char b[4];
    get_bytes(b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double get_f64(const char* what) {
    unsigned char b[8];
    get_bytes(b, 8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store) {
  check(!store.params.empty(), "checkpoint: refusing to write empty parameter set to '", path,
        "'");
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "checkpoint: cannot open '", path, "' for writing");

  put_bytes(out, kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(store.params.size()));
  for (const auto& p : store.params) {
    check(p.name.size() <= 0xffff, "checkpoint: parameter name too long: '", p.name, "'");
    check(p.shape.rank <= 2, "checkpoint: parameter '", p.name, "' has unsupported rank ",
          p.shape.rank);
    put_u16(out, static_cast<std::uint16_t>(p.name.size()));
    put_bytes(out, p.name.data(), p.name.size());
    unsigned char rank = static_cast<unsigned char>(p.shape.rank);
    put_bytes(out, &rank, 1);
    if (p.shape.rank >= 1) put_u32(out, static_cast<std::uint32_t>(p.shape.rows));
    if (p.shape.rank == 2) put_u32(out, static_cast<std::uint32_t>(p.shape.cols));
    for (double v : p.vals) put_f64(out, v);
  }
  out.flush();
  check(out.good(), "checkpoint: write to '", path, "' failed");
}

ParamStore load_checkpoint(const std::string& path) {
  Reader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  check(r.in.good(), "checkpoint: cannot open '", path, "' for reading");

  char magic[4];
  r.get_bytes(magic, 4, "magic");
  check(std::memcmp(magic, kMagic, 4) == 0, "checkpoint '", path,
        "': bad magic (expected \"AINC\", got \"", std::string(magic, 4), "\")");
  std::uint32_t version = r.get_u32("version");
  check(version == kVersion, "checkpoint '", path, "': unsupported version ", version,
        " (expected ", kVersion, ")");
  std::uint32_t count = r.get_u32("tensor count");
  check(count >= 1 && count <= 1000000, "checkpoint '", path, "': implausible tensor count ",
        count);

  ParamStore store;
  for (std::uint32_t t = 0; t < count; ++t) {
    std::uint16_t name_len = r.get_u16("name length");
    check(name_len >= 1, "checkpoint '", path, "': tensor ", t, " has an empty name");
    std::string name(name_len, '\0');
    r.get_bytes(name.data(), name_len, "name");

    unsigned char rank;
    r.get_bytes(&rank, 1, "rank");
    check(rank <= 2, "checkpoint '", path, "': tensor '", name, "' has unsupported rank ",
          static_cast<int>(rank));
    ag::Shape shape = ag::Shape::scalar();
    if (rank == 1) {
      std::uint32_t d0 = r.get_u32("dim 0");
      check(d0 >= 1, "checkpoint '", path, "': tensor '", name, "' has zero dim");
      shape = ag::Shape::vec(d0);
    } else if (rank == 2) {
      std::uint32_t d0 = r.get_u32("dim 0");
      std::uint32_t d1 = r.get_u32("dim 1");
      check(d0 >= 1 && d1 >= 1, "checkpoint '", path, "': tensor '", name, "' has zero dim");
      check(static_cast<std::uint64_t>(d0) * d1 <= 100000000ull, "checkpoint '", path,
            "': tensor '", name, "' is implausibly large (", d0, "x", d1, ")");
      shape = ag::Shape::mat(d0, d1);
    }

    std::vector<double> vals(shape.size());
    for (double& v : vals) {
      v = r.get_f64("values");
      check(std::isfinite(v), "checkpoint '", path, "': tensor '", name,
            "' contains a non-finite value");
    }
    store.add(std::move(name), shape, std::move(vals));
  }

  char extra;
  r.in.read(&extra, 1);
  check(r.in.gcount() == 0, "checkpoint '", path, "': trailing bytes after ", count, " tensors");
  return store;
}

}  // namespace ainc

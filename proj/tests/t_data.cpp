#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ainc/data.hpp"
#include "ainc/rng.hpp"

using namespace ainc;

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct TmpFile {
  std::string path;
  explicit TmpFile(const std::string& name) : path("/tmp/ainc_t_data_" + name) {}
  ~TmpFile() { std::remove(path.c_str()); }
  void write(const std::string& body) const {
    std::ofstream f(path, std::ios::binary);
    f << body;
  }
};

std::string error_of(const std::string& body) {
  TmpFile f("err.csv");
  f.write(body);
  try {
    (void)load_csv(f.path);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

AugmentPolicy identity_policy() {
  AugmentPolicy p;
  p.noise_sigma = 0.0;
  p.mask_prob = 0.0;
  p.brightness_lo = 1.0;
  p.brightness_hi = 1.0;
  return p;
}

}  // namespace

TEST_CASE("csv save/load round trip is bit-exact, including extreme values") {
  Dataset ds;
  ds.dim = 3;
  Rng rng(5);
  for (std::size_t i = 0; i < 10; ++i) {
    ds.y.push_back(i % 4);
    ds.x.push_back(rng.uniform());
    ds.x.push_back(rng.normal() * 1e-15);
    ds.x.push_back(i == 0 ? 0.1 + 0.2 : rng.uniform());  // classic non-representable sum
  }
  ds.x[5] = 1e-300;
  ds.x[8] = -1e300;

  TmpFile f("roundtrip.csv");
  save_csv(f.path, ds);
  Dataset back = load_csv(f.path);
  CHECK(back.dim == 3);
  CHECK(back.y == ds.y);
  CHECK(bit_equal(back.x, ds.x));
}

TEST_CASE("csv loader accepts CRLF and one trailing newline") {
  TmpFile f("crlf.csv");
  f.write("label,f0,f1\r\n1,0.5,0.25\r\n0,0.125,1\r\n");
  Dataset ds = load_csv(f.path);
  CHECK(ds.size() == 2);
  CHECK(ds.dim == 2);
  CHECK(ds.y == std::vector<std::size_t>{1, 0});
  CHECK(ds.x == std::vector<double>{0.5, 0.25, 0.125, 1.0});
}

TEST_CASE("csv loader reports precise parse errors") {
  CHECK(error_of("").find("empty") != std::string::npos);
  CHECK(error_of("f0,f1\n0,1\n").find("header") != std::string::npos);
  CHECK(error_of("label,f0\n").find("no data rows") != std::string::npos);

  // Errors carry 1-based line numbers.
  CHECK(error_of("label,f0\n0,0.5\nx,0.5\n").find("line 3") != std::string::npos);
  CHECK(error_of("label,f0\n-1,0.5\n").find("label") != std::string::npos);
  CHECK(error_of("label,f0\n0,abc\n").find("line 2") != std::string::npos);
  CHECK(error_of("label,f0\n0,nan\n").find("finite") != std::string::npos);
  CHECK(error_of("label,f0\n0,0.5,0.5\n").find("fields") != std::string::npos);
  CHECK(error_of("label,f0\n0\n").find("fields") != std::string::npos);
  CHECK(error_of("label,f0\n0,1e999\n") != "");  // overflow rejected
}

TEST_CASE("dataset validation catches structural breakage") {
  Dataset ds;
  ds.dim = 2;
  ds.x = {0.1, 0.2, 0.3, 0.4};
  ds.y = {0, 1};
  ds.validate();
  CHECK(ds.classes() == 2);

  Dataset bad = ds;
  bad.x.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = ds;
  bad.dim = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("blob generation is deterministic and class-blocked") {
  Dataset a = gen_blobs(4, 8, 20, 0.08, 1234);
  Dataset b = gen_blobs(4, 8, 20, 0.08, 1234);
  Dataset c = gen_blobs(4, 8, 20, 0.08, 4321);
  CHECK(a.size() == 80);
  CHECK(a.dim == 8);
  CHECK(bit_equal(a.x, b.x));
  CHECK(a.y == b.y);
  CHECK_FALSE(bit_equal(a.x, c.x));

  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.y[i] == i / 20);  // class-major block order
    for (std::size_t j = 0; j < a.dim; ++j) {
      CHECK(a.row(i)[j] >= 0.0);
      CHECK(a.row(i)[j] <= 1.0);
    }
  }
}

TEST_CASE("blobs are separable: nearest class mean recovers every label") {
  Dataset ds = gen_blobs(10, 32, 50, 0.08, 1234);
  const std::size_t classes = 10, dim = ds.dim;
  std::vector<double> centers(classes * dim, 0.0);
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) centers[ds.y[i] * dim + j] += ds.row(i)[j];
    ++counts[ds.y[i]];
  }
  for (std::size_t cl = 0; cl < classes; ++cl)
    for (std::size_t j = 0; j < dim; ++j)
      centers[cl * dim + j] /= static_cast<double>(counts[cl]);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t cl = 0; cl < classes; ++cl) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = ds.row(i)[j] - centers[cl * dim + j];
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        arg = cl;
      }
    }
    if (arg == ds.y[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(ds.size()) >= 0.99);
}

TEST_CASE("blob generation rejects impossible class counts") {
  CHECK_THROWS_AS((void)gen_blobs(0, 8, 10, 0.1, 1), Error);
  CHECK_THROWS_AS((void)gen_blobs(4, 0, 10, 0.1, 1), Error);
  CHECK_THROWS_AS((void)gen_blobs(4, 8, 0, 0.1, 1), Error);
  CHECK_THROWS_AS((void)gen_blobs(5, 2, 10, 0.1, 1), Error);  // 5 classes, 2^2 codes
  (void)gen_blobs(8, 3, 2, 0.1, 1);                           // 8 classes fit 3 bits
}

TEST_CASE("identity augmentation returns the row bitwise") {
  Rng rng(7);
  std::vector<double> x = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> out(5, -1.0);
  augment_row(x.data(), out.data(), 5, identity_policy(), rng);
  CHECK(bit_equal(out, x));
}

TEST_CASE("augmentation consumes a fixed number of draws regardless of outcome") {
  const std::size_t dim = 6;
  std::vector<double> x(dim, 0.5), out(dim);

  for (AugmentPolicy pol : {identity_policy(), AugmentPolicy{}}) {
    Rng used(911);
    augment_row(x.data(), out.data(), dim, pol, used);

    Rng twin(911);
    (void)twin.uniform(pol.brightness_lo, pol.brightness_hi);  // brightness
    for (std::size_t j = 0; j < dim; ++j) (void)twin.normal(); // noise
    for (std::size_t j = 0; j < dim; ++j) (void)twin.uniform();// mask
    CHECK(used.uniform() == twin.uniform());  // streams aligned afterwards
  }
}

TEST_CASE("brightness rescales rows by one shared in-range factor") {
  AugmentPolicy pol = identity_policy();
  pol.brightness_lo = 0.8;
  pol.brightness_hi = 1.2;
  Rng rng(13);
  std::vector<double> x = {0.2, 0.4, 0.6, 0.3};
  std::vector<double> out(4);
  for (int rep = 0; rep < 20; ++rep) {
    augment_row(x.data(), out.data(), 4, pol, rng);
    const double s = out[0] / x[0];
    CHECK(s >= 0.8);
    CHECK(s <= 1.2);
    for (std::size_t j = 1; j < 4; ++j)
      CHECK(out[j] == doctest::Approx(x[j] * s).epsilon(1e-12));
  }
}

TEST_CASE("masking hits coordinates at the configured rate") {
  AugmentPolicy pol = identity_policy();
  pol.mask_prob = 0.1;
  Rng rng(17);
  std::vector<double> x(50, 0.5), out(50);
  std::size_t masked = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    augment_row(x.data(), out.data(), 50, pol, rng);
    for (double v : out) masked += v == 0.0 ? 1 : 0;
  }
  const double n = 50.0 * reps;
  const double rate = static_cast<double>(masked) / n;
  const double sigma = std::sqrt(0.1 * 0.9 / n);
  CHECK(std::abs(rate - 0.1) < 3.0 * sigma + 1e-12);
}

TEST_CASE("noise and clamping keep augmented rows in the input range") {
  AugmentPolicy pol;  // defaults: sigma 0.05, mask 0.1, brightness [0.8, 1.2]
  Rng rng(19);
  std::vector<double> x = {0.0, 0.01, 0.5, 0.99, 1.0};
  std::vector<double> out(5);
  for (int rep = 0; rep < 100; ++rep) {
    augment_row(x.data(), out.data(), 5, pol, rng);
    for (double v : out) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("augment policy validation") {
  AugmentPolicy p;
  p.validate();
  p.noise_sigma = -0.1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = AugmentPolicy{};
  p.mask_prob = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p = AugmentPolicy{};
  p.brightness_lo = 1.3;  // lo > hi
  CHECK_THROWS_AS(p.validate(), Error);
  p = AugmentPolicy{};
  p.brightness_lo = -0.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p = AugmentPolicy{};
  p.input_lo = 2.0;  // lo >= hi
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("contrastive batches carry sources, labels and two distinct views") {
  Dataset ds = gen_blobs(3, 6, 10, 0.08, 77);
  AugmentPolicy pol;
  Rng rng(23);
  std::vector<std::size_t> idx = {4, 17, 25, 0};
  ContrastiveBatch batch = make_batch(ds, idx, pol, rng);

  CHECK(batch.b == 4);
  CHECK(batch.dim == 6);
  CHECK(batch.indices == idx);
  REQUIRE(batch.labels.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(batch.labels[i] == ds.y[idx[i]]);
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(batch.source[i * 6 + j] == ds.row(idx[i])[j]);
  }
  CHECK_FALSE(bit_equal(batch.view1, batch.view2));
  CHECK_FALSE(bit_equal(batch.view1, batch.source));

  // Same RNG state reproduces the batch bitwise.
  Rng rng2(23);
  ContrastiveBatch again = make_batch(ds, idx, pol, rng2);
  CHECK(bit_equal(again.view1, batch.view1));
  CHECK(bit_equal(again.view2, batch.view2));
}

TEST_CASE("view1 of every row is drawn before any view2") {
  Dataset ds = gen_blobs(2, 4, 5, 0.05, 31);
  AugmentPolicy pol;
  std::vector<std::size_t> idx = {1, 7};

  Rng rng(41);
  ContrastiveBatch batch = make_batch(ds, idx, pol, rng);

  // Replay the documented order by hand on a twin stream.
  Rng twin(41);
  std::vector<double> v1(2 * 4), v2(2 * 4);
  for (std::size_t i = 0; i < 2; ++i)
    augment_row(ds.row(idx[i]), v1.data() + i * 4, 4, pol, twin);
  for (std::size_t i = 0; i < 2; ++i)
    augment_row(ds.row(idx[i]), v2.data() + i * 4, 4, pol, twin);
  CHECK(bit_equal(batch.view1, v1));
  CHECK(bit_equal(batch.view2, v2));
}

TEST_CASE("batch construction rejects duplicates and bad indices") {
  Dataset ds = gen_blobs(2, 4, 5, 0.05, 37);
  AugmentPolicy pol;
  Rng rng(1);
  CHECK_THROWS_AS((void)make_batch(ds, {1, 1}, pol, rng), Error);
  CHECK_THROWS_AS((void)make_batch(ds, {10}, pol, rng), Error);
  CHECK_THROWS_AS((void)make_batch(ds, {}, pol, rng), Error);
}

TEST_CASE("epoch ordering is a deterministic permutation that varies by epoch") {
  auto o1 = epoch_order(100, 9, 0);
  auto o2 = epoch_order(100, 9, 0);
  auto o3 = epoch_order(100, 9, 1);
  auto o4 = epoch_order(100, 10, 0);
  CHECK(o1 == o2);
  CHECK(o1 != o3);
  CHECK(o1 != o4);

  auto sorted = o1;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 100; ++i) CHECK(sorted[i] == i);

  CHECK(epoch_order(1, 5, 3) == std::vector<std::size_t>{0});
}

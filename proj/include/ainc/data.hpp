#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ainc/rng.hpp"

namespace ainc {

struct Dataset {
  std::size_t dim = 0;
  std::vector<double> x;        // size() x dim, row-major
  std::vector<std::size_t> y;   // one label per row

  std::size_t size() const { return y.size(); }
  std::size_t classes() const;  // max label + 1 (0 when empty)
  const double* row(std::size_t i) const { return x.data() + i * dim; }
  void validate() const;
};

// CSV with header "label,f0,...,f{D-1}", one sample per row, values printed
// with 17 significant digits so a save/load round trip is bit-exact.
Dataset load_csv(const std::string& path);
void save_csv(const std::string& path, const Dataset& ds);

// Isotropic Gaussian blobs clipped to [0,1]^dim, in class-block row order.
// Class centers sit on distinct axis-pair corners so every pair of classes is
// separated in at least one coordinate.
Dataset gen_blobs(std::size_t classes, std::size_t dim, std::size_t n_per_class, double spread,
                  std::uint64_t seed);

struct AugmentPolicy {
  double noise_sigma = 0.05;
  double mask_prob = 0.1;
  double brightness_lo = 0.8, brightness_hi = 1.2;
  double input_lo = 0.0, input_hi = 1.0;

  void validate() const;
};

// One stochastic view of a row: brightness scale, additive Gaussian noise,
// coordinate masking, then clamp to the input range. Consumes exactly
// 1 + dim + dim RNG draws regardless of outcomes.
void augment_row(const double* x, double* out, std::size_t dim, const AugmentPolicy& pol,
                 Rng& rng);

struct ContrastiveBatch {
  std::size_t b = 0, dim = 0;
  std::vector<std::size_t> indices;  // source rows in the dataset
  std::vector<std::size_t> labels;
  std::vector<double> source;  // b x dim, unaugmented
  std::vector<double> view1;   // b x dim
  std::vector<double> view2;   // b x dim
};

// Two independent augmented views per selected row (view1 of every row first,
// then view2 of every row). Duplicate indices are rejected.
ContrastiveBatch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices,
                            const AugmentPolicy& pol, Rng& rng);

// Deterministic per-epoch shuffle of [0, n).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

}  // namespace ainc

#include "ainc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "ainc/common.hpp"

namespace ainc {

std::size_t Dataset::classes() const {
  std::size_t c = 0;
  for (std::size_t label : y) c = std::max(c, label + 1);
  return c;
}

void Dataset::validate() const {
  check(dim >= 1, "dataset: dim must be >= 1, got ", dim);
  check(x.size() == y.size() * dim, "dataset: ", x.size(), " values do not match ", y.size(),
        " rows of dim ", dim);
  for (double v : x) check(std::isfinite(v), "dataset: non-finite feature value");
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "csv: cannot open '", path, "' for reading");

  std::string line;
  check(static_cast<bool>(std::getline(in, line)), "csv: '", path, "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> head = split_csv_line(line);
  check(head.size() >= 2 && head[0] == "label", "csv: '", path,
        "': header must start with 'label,f0', got '", line, "'");
  for (std::size_t i = 1; i < head.size(); ++i) {
    std::string want = "f" + std::to_string(i - 1);
    check(head[i] == want, "csv: '", path, "': header column ", i + 1, " must be '", want,
          "', got '", head[i], "'");
  }

  Dataset ds;
  ds.dim = head.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      check(in.peek() == std::ifstream::traits_type::eof(), "csv: '", path, "': line ", line_no,
            " is empty");
      break;  // tolerate one trailing newline
    }
    std::vector<std::string> tok = split_csv_line(line);
    check(tok.size() == ds.dim + 1, "csv: '", path, "': line ", line_no, " has ", tok.size(),
          " fields, expected ", ds.dim + 1);

    const char* s = tok[0].c_str();
    char* end = nullptr;
    unsigned long long label = std::strtoull(s, &end, 10);
    check(*s != '\0' && *s != '-' && end != s && *end == '\0', "csv: '", path, "': line ", line_no,
          ": cannot parse label '", tok[0], "' as a non-negative integer");
    ds.y.push_back(static_cast<std::size_t>(label));

    for (std::size_t i = 1; i < tok.size(); ++i) {
      const char* vs = tok[i].c_str();
      end = nullptr;
      double v = std::strtod(vs, &end);
      check(*vs != '\0' && end != vs && *end == '\0', "csv: '", path, "': line ", line_no,
            ", field ", i + 1, ": cannot parse '", tok[i], "' as a number");
      check(std::isfinite(v), "csv: '", path, "': line ", line_no, ", field ", i + 1,
            ": non-finite value '", tok[i], "'");
      ds.x.push_back(v);
    }
  }
  check(!ds.y.empty(), "csv: '", path, "' has a header but no data rows");
  return ds;
}

void save_csv(const std::string& path, const Dataset& ds) {
  ds.validate();
  check(ds.size() > 0, "csv: refusing to write empty dataset to '", path, "'");
  std::ofstream out(path);
  check(out.good(), "csv: cannot open '", path, "' for writing");
  out << "label";
  for (std::size_t d = 0; d < ds.dim; ++d) out << ",f" << d;
  out << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.y[i];
    const double* row = ds.row(i);
    for (std::size_t d = 0; d < ds.dim; ++d) out << ',' << fmt17(row[d]);
    out << "\n";
  }
  out.flush();
  check(out.good(), "csv: write to '", path, "' failed");
}

// ---------------------------------------------------------------- blobs

Dataset gen_blobs(std::size_t classes, std::size_t dim, std::size_t n_per_class, double spread,
                  std::uint64_t seed) {
  check(classes >= 2, "blobs: need at least 2 classes, got ", classes);
  check(dim >= 1, "blobs: dim must be >= 1, got ", dim);
  check(n_per_class >= 1, "blobs: n_per_class must be >= 1, got ", n_per_class);
  check(std::isfinite(spread) && spread > 0.0, "blobs: spread must be > 0, got ", spread);

  // Distinct centers: one "hot" coordinate per class when there is room,
  // otherwise the binary code of the class index across coordinates.
  const double lo = 0.2, hi = 0.8;
  std::vector<double> centers(classes * dim, lo);
  if (classes <= dim) {
    for (std::size_t c = 0; c < classes; ++c) centers[c * dim + c] = hi;
  } else {
    std::size_t code_bits = std::min<std::size_t>(dim, 63);
    check(classes <= (std::size_t{1} << code_bits), "blobs: cannot place ", classes,
          " distinct class centers in ", dim, " dimensions");
    for (std::size_t c = 0; c < classes; ++c)
      for (std::size_t d = 0; d < code_bits; ++d)
        if ((c >> d) & 1) centers[c * dim + d] = hi;
  }

  Rng rng(seed);
  Dataset ds;
  ds.dim = dim;
  ds.x.resize(classes * n_per_class * dim);
  ds.y.resize(classes * n_per_class);
  std::size_t r = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < n_per_class; ++s, ++r) {
      ds.y[r] = c;
      for (std::size_t d = 0; d < dim; ++d) {
        double v = centers[c * dim + d] + spread * rng.normal();
        ds.x[r * dim + d] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------- augment

void AugmentPolicy::validate() const {
  check(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "augment: noise_sigma must be >= 0");
  check(std::isfinite(mask_prob) && mask_prob >= 0.0 && mask_prob <= 1.0,
        "augment: mask_prob must be in [0, 1], got ", mask_prob);
  check(std::isfinite(brightness_lo) && std::isfinite(brightness_hi) &&
            brightness_lo <= brightness_hi && brightness_lo > 0.0,
        "augment: brightness range [", brightness_lo, ", ", brightness_hi, "] is invalid");
  check(input_lo < input_hi, "augment: input range [", input_lo, ", ", input_hi, ") is invalid");
}

void augment_row(const double* x, double* out, std::size_t dim, const AugmentPolicy& pol,
                 Rng& rng) {
  double scale = rng.uniform(pol.brightness_lo, pol.brightness_hi);
  for (std::size_t d = 0; d < dim; ++d) out[d] = x[d] * scale + pol.noise_sigma * rng.normal();
  for (std::size_t d = 0; d < dim; ++d)
    if (rng.uniform() < pol.mask_prob) out[d] = 0.0;
  for (std::size_t d = 0; d < dim; ++d)
    out[d] = out[d] < pol.input_lo ? pol.input_lo : (out[d] > pol.input_hi ? pol.input_hi : out[d]);
}

// ---------------------------------------------------------------- batches

ContrastiveBatch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices,
                            const AugmentPolicy& pol, Rng& rng) {
  ds.validate();
  pol.validate();
  check(!indices.empty(), "batch: index list is empty");
  std::unordered_set<std::size_t> seen;
  for (std::size_t i : indices) {
    check(i < ds.size(), "batch: index ", i, " out of range for dataset of size ", ds.size());
    check(seen.insert(i).second, "batch: duplicate index ", i);
  }

  ContrastiveBatch out;
  out.b = indices.size();
  out.dim = ds.dim;
  out.indices = indices;
  out.labels.reserve(out.b);
  out.source.resize(out.b * ds.dim);
  out.view1.resize(out.b * ds.dim);
  out.view2.resize(out.b * ds.dim);
  for (std::size_t r = 0; r < out.b; ++r) {
    out.labels.push_back(ds.y[indices[r]]);
    std::copy_n(ds.row(indices[r]), ds.dim, out.source.data() + r * ds.dim);
  }
  for (std::size_t r = 0; r < out.b; ++r)
    augment_row(out.source.data() + r * ds.dim, out.view1.data() + r * ds.dim, ds.dim, pol, rng);
  for (std::size_t r = 0; r < out.b; ++r)
    augment_row(out.source.data() + r * ds.dim, out.view2.data() + r * ds.dim, ds.dim, pol, rng);
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, seed_tag::shuffle, epoch));
  shuffle(order, rng);
  return order;
}

}  // namespace ainc

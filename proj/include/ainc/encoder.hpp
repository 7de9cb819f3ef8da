#pragma once

#include <cstdint>
#include <vector>

#include "ainc/params.hpp"
#include "ainc/rng.hpp"
#include "ainc/tensor.hpp"

namespace ainc {

// MLP encoder: backbone of fully connected layers with relu strictly between
// them (none after the last), then a linear projection head whose output is
// row-normalized. Features h come from the backbone, embeddings z from the
// normalized projection.
struct MlpConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden = {128, 128};  // last entry is the feature width
  std::size_t proj_dim = 32;

  void validate() const;
  std::size_t feature_dim() const { return hidden.back(); }
};

class Encoder {
 public:
  // He-normal weights (std = sqrt(2 / fan_in)), zero biases; draws consumed
  // in parameter order, each weight matrix row-major.
  static Encoder init(const MlpConfig& cfg, std::uint64_t seed);

  // Rebuild from named parameters (e.g. a loaded checkpoint); the layer
  // structure is recovered from the parameter shapes.
  static Encoder from_params(const ParamStore& store);

  const MlpConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  std::size_t param_count() const { return store_.value_count(); }

  struct Bound {
    std::vector<ag::Tensor> weights, biases;  // backbone
    ag::Tensor proj_w, proj_b;
    // Leaf ids paired with parameter indices; empty when bound frozen.
    std::vector<std::pair<std::size_t, int>> leaf_of_param;
  };

  // Binds parameters into a graph: trainable leaves, or constants when
  // frozen (frozen parameters receive no gradient by construction).
  Bound bind(ag::Graph& g, bool frozen) const;

  struct Encoded {
    ag::Tensor h;  // backbone features (n, feature_dim)
    ag::Tensor z;  // unit-norm projections (n, proj_dim)
  };
  Encoded encode(ag::Graph& g, const Bound& b, ag::Tensor x) const;

  // Convenience: forward pass on raw values, no graph kept.
  void embed(const std::vector<double>& x, std::size_t rows,
             std::vector<double>* h_out, std::vector<double>* z_out) const;

 private:
  MlpConfig cfg_;
  ParamStore store_;
};

// Linear classification head over backbone features.
class LinearClassifier {
 public:
  static LinearClassifier init(std::size_t classes, std::size_t feature_dim,
                               std::uint64_t seed);
  static LinearClassifier from_params(const ParamStore& store);

  std::size_t classes() const { return classes_; }
  std::size_t feature_dim() const { return feature_dim_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  struct Bound {
    ag::Tensor w, b;
    std::vector<std::pair<std::size_t, int>> leaf_of_param;
  };
  Bound bind(ag::Graph& g, bool frozen) const;
  ag::Tensor logits(ag::Graph& g, const Bound& b, ag::Tensor h) const;

  std::vector<double> logits_values(const std::vector<double>& h, std::size_t rows) const;

 private:
  std::size_t classes_ = 0, feature_dim_ = 0;
  ParamStore store_;
};

}  // namespace ainc

#include "ainc/encoder.hpp"

#include <cmath>

#include "ainc/kernels.hpp"

namespace ainc {

void MlpConfig::validate() const {
  check(input_dim > 0, "encoder: input_dim must be positive");
  check(!hidden.empty(), "encoder: at least one hidden layer required");
  for (std::size_t w : hidden) check(w > 0, "encoder: hidden width must be positive");
  check(proj_dim > 0, "encoder: proj_dim must be positive");
}

void SgdState::step(ParamStore& store, const std::vector<std::vector<double>>& grads,
                    double lr, double momentum, double grad_scale) {
  check(grads.size() == store.params.size(), "sgd: gradient count mismatch");
  const auto& k = kern::ops();
  for (std::size_t i = 0; i < store.params.size(); ++i) {
    auto& p = store.params[i].vals;
    auto& v = velocity_[i];
    check(grads[i].size() == p.size(), "sgd: gradient size mismatch for ",
          store.params[i].name);
    k.scale(v.data(), momentum, v.data(), v.size());
    k.axpy(grad_scale, grads[i].data(), v.data(), v.size());
    k.axpy(-lr, v.data(), p.data(), p.size());
  }
}

namespace {

std::vector<double> he_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(cols));
  std::vector<double> w(rows * cols);
  for (double& x : w) x = stddev * rng.normal();
  return w;
}

}  // namespace

Encoder Encoder::init(const MlpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Encoder e;
  e.cfg_ = cfg;
  Rng rng(seed);
  std::size_t in = cfg.input_dim;
  for (std::size_t l = 0; l < cfg.hidden.size(); ++l) {
    const std::size_t out = cfg.hidden[l];
    e.store_.add(msg("backbone.", l, ".W"), ag::Shape::mat(out, in), he_normal(out, in, rng));
    e.store_.add(msg("backbone.", l, ".b"), ag::Shape::vec(out), std::vector<double>(out, 0.0));
    in = out;
  }
  e.store_.add("proj.W", ag::Shape::mat(cfg.proj_dim, in), he_normal(cfg.proj_dim, in, rng));
  e.store_.add("proj.b", ag::Shape::vec(cfg.proj_dim), std::vector<double>(cfg.proj_dim, 0.0));
  return e;
}

Encoder Encoder::from_params(const ParamStore& store) {
  Encoder e;
  MlpConfig cfg;
  cfg.hidden.clear();
  std::size_t l = 0;
  while (true) {
    const NamedParam* w = store.find(msg("backbone.", l, ".W"));
    if (w == nullptr) break;
    const NamedParam& b = store.get(msg("backbone.", l, ".b"));
    check(w->shape.rank == 2, "checkpoint: backbone.", l, ".W must be rank 2");
    check(b.shape.rank == 1 && b.shape.rows == w->shape.rows,
          "checkpoint: backbone.", l, ".b shape mismatch");
    if (l == 0) {
      cfg.input_dim = w->shape.cols;
    } else {
      check(w->shape.cols == cfg.hidden.back(), "checkpoint: backbone.", l,
            ".W width does not chain");
    }
    cfg.hidden.push_back(w->shape.rows);
    e.store_.add(w->name, w->shape, w->vals);
    e.store_.add(b.name, b.shape, b.vals);
    ++l;
  }
  check(l > 0, "checkpoint: no backbone layers found");
  const NamedParam& pw = store.get("proj.W");
  const NamedParam& pb = store.get("proj.b");
  check(pw.shape.rank == 2 && pw.shape.cols == cfg.hidden.back(),
        "checkpoint: proj.W shape mismatch");
  check(pb.shape.rank == 1 && pb.shape.rows == pw.shape.rows,
        "checkpoint: proj.b shape mismatch");
  cfg.proj_dim = pw.shape.rows;
  e.store_.add(pw.name, pw.shape, pw.vals);
  e.store_.add(pb.name, pb.shape, pb.vals);
  cfg.validate();
  e.cfg_ = cfg;
  return e;
}

Encoder::Bound Encoder::bind(ag::Graph& g, bool frozen) const {
  Bound b;
  const auto bind_one = [&](const std::string& name) -> ag::Tensor {
    std::size_t pi = 0;
    for (; pi < store_.params.size(); ++pi)
      if (store_.params[pi].name == name) break;
    const NamedParam& p = store_.params[pi];
    if (frozen) return g.constant(p.shape, p.vals);
    ag::Tensor t = g.leaf(p.shape, p.vals);
    b.leaf_of_param.emplace_back(pi, t.id);
    return t;
  };
  for (std::size_t l = 0; l < cfg_.hidden.size(); ++l) {
    b.weights.push_back(bind_one(msg("backbone.", l, ".W")));
    b.biases.push_back(bind_one(msg("backbone.", l, ".b")));
  }
  b.proj_w = bind_one("proj.W");
  b.proj_b = bind_one("proj.b");
  return b;
}

Encoder::Encoded Encoder::encode(ag::Graph& g, const Bound& b, ag::Tensor x) const {
  (void)g;  // ops attach to x's graph; kept for call-site symmetry
  check(x.shape().rank == 2, "encode: input must be rank 2, got ", x.shape().str());
  check(x.shape().cols == cfg_.input_dim, "encode: input width ", x.shape().cols,
        " does not match encoder input_dim ", cfg_.input_dim);
  ag::Tensor a = x;
  for (std::size_t l = 0; l < b.weights.size(); ++l) {
    a = ag::add(ag::matmul(a, b.weights[l], false, true), b.biases[l]);
    if (l + 1 < b.weights.size()) a = ag::relu(a);
  }
  ag::Tensor p = ag::add(ag::matmul(a, b.proj_w, false, true), b.proj_b);
  return {a, ag::l2norm_rows(p)};
}

void Encoder::embed(const std::vector<double>& x, std::size_t rows,
                    std::vector<double>* h_out, std::vector<double>* z_out) const {
  check(rows > 0, "embed: empty input");
  check(x.size() == rows * cfg_.input_dim, "embed: input size mismatch");
  ag::Graph g;
  Bound b = bind(g, /*frozen=*/true);
  ag::Tensor xin = g.constant(ag::Shape::mat(rows, cfg_.input_dim), x);
  Encoded e = encode(g, b, xin);
  if (h_out != nullptr) *h_out = e.h.vals();
  if (z_out != nullptr) *z_out = e.z.vals();
}

LinearClassifier LinearClassifier::init(std::size_t classes, std::size_t feature_dim,
                                        std::uint64_t seed) {
  check(classes >= 2, "classifier: need at least 2 classes");
  check(feature_dim > 0, "classifier: feature_dim must be positive");
  LinearClassifier c;
  c.classes_ = classes;
  c.feature_dim_ = feature_dim;
  Rng rng(seed);
  c.store_.add("classifier.W", ag::Shape::mat(classes, feature_dim),
               he_normal(classes, feature_dim, rng));
  c.store_.add("classifier.b", ag::Shape::vec(classes), std::vector<double>(classes, 0.0));
  return c;
}

LinearClassifier LinearClassifier::from_params(const ParamStore& store) {
  const NamedParam& w = store.get("classifier.W");
  const NamedParam& b = store.get("classifier.b");
  check(w.shape.rank == 2, "checkpoint: classifier.W must be rank 2");
  check(b.shape.rank == 1 && b.shape.rows == w.shape.rows,
        "checkpoint: classifier.b shape mismatch");
  LinearClassifier c;
  c.classes_ = w.shape.rows;
  c.feature_dim_ = w.shape.cols;
  c.store_.add(w.name, w.shape, w.vals);
  c.store_.add(b.name, b.shape, b.vals);
  return c;
}

LinearClassifier::Bound LinearClassifier::bind(ag::Graph& g, bool frozen) const {
  Bound b;
  const NamedParam& w = store_.get("classifier.W");
  const NamedParam& bb = store_.get("classifier.b");
  if (frozen) {
    b.w = g.constant(w.shape, w.vals);
    b.b = g.constant(bb.shape, bb.vals);
  } else {
    b.w = g.leaf(w.shape, w.vals);
    b.leaf_of_param.emplace_back(0, b.w.id);
    b.b = g.leaf(bb.shape, bb.vals);
    b.leaf_of_param.emplace_back(1, b.b.id);
  }
  return b;
}

ag::Tensor LinearClassifier::logits(ag::Graph& g, const Bound& b, ag::Tensor h) const {
  (void)g;
  check(h.shape().rank == 2 && h.shape().cols == feature_dim_,
        "classifier: feature width ", h.shape().cols, " != ", feature_dim_);
  return ag::add(ag::matmul(h, b.w, false, true), b.b);
}

std::vector<double> LinearClassifier::logits_values(const std::vector<double>& h,
                                                    std::size_t rows) const {
  check(h.size() == rows * feature_dim_, "classifier: feature buffer size mismatch");
  ag::Graph g;
  Bound b = bind(g, /*frozen=*/true);
  ag::Tensor hh = g.constant(ag::Shape::mat(rows, feature_dim_), h);
  return logits(g, b, hh).vals();
}

}  // namespace ainc

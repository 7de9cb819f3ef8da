#include "ainc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ainc/kernels.hpp"

namespace ainc::ag {

namespace {
const kern::Ops& K() { return kern::ops(); }
}  // namespace

std::string Shape::str() const {
  if (rank == 0) return "scalar";
  if (rank == 1) return msg("(", rows, ")");
  return msg("(", rows, " x ", cols, ")");
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Constant: return "constant";
    case Kind::Leaf: return "leaf";
    case Kind::Add: return "add";
    case Kind::Sub: return "sub";
    case Kind::Mul: return "mul";
    case Kind::Scale: return "scale";
    case Kind::MatMul: return "matmul";
    case Kind::Relu: return "relu";
    case Kind::Exp: return "exp";
    case Kind::Log: return "log";
    case Kind::Sum: return "sum";
    case Kind::Mean: return "mean";
    case Kind::DotRows: return "dot_rows";
    case Kind::DotRowsAsym: return "sim_alpha";
    case Kind::AsymSimMatrix: return "asym_sim_matrix";
    case Kind::L2NormRows: return "l2norm_rows";
    case Kind::SoftmaxXent: return "softmax_xent";
    case Kind::StopGrad: return "stop_grad";
    case Kind::GatherRows: return "gather_rows";
    case Kind::ConcatRows: return "concat_rows";
    case Kind::Reshape: return "reshape";
  }
  return "?";
}

const Shape& Tensor::shape() const { return g->node(id).shape; }
const std::vector<double>& Tensor::vals() const { return g->node(id).vals; }
const std::vector<double>& Tensor::grad() const { return g->grad(id); }
double Tensor::scalar_val() const {
  check(shape().rank == 0, "scalar_val: tensor is ", shape().str());
  return vals()[0];
}

Tensor Graph::constant(Shape s, std::vector<double> vals) {
  check(vals.size() == s.size(), "constant: value count ", vals.size(),
        " does not match shape ", s.str());
  Node n;
  n.kind = Kind::Constant;
  n.shape = s;
  n.vals = std::move(vals);
  return emit(std::move(n));
}

Tensor Graph::scalar_const(double v) { return constant(Shape::scalar(), {v}); }

Tensor Graph::leaf(Shape s, std::vector<double> vals) {
  check(vals.size() == s.size(), "leaf: value count ", vals.size(),
        " does not match shape ", s.str());
  Node n;
  n.kind = Kind::Leaf;
  n.shape = s;
  n.vals = std::move(vals);
  return emit(std::move(n));
}

Tensor Graph::emit(Node&& n) {
  check(nodes_.size() < static_cast<std::size_t>(INT32_MAX), "graph too large");
  if (n.kind != Kind::Constant && n.kind != Kind::Leaf) compute(n);
  nodes_.push_back(std::move(n));
  return Tensor{this, static_cast<int>(nodes_.size() - 1)};
}

const std::vector<double>& Graph::grad(int id) const {
  check(!grads_.empty(), "grad: backward has not been run");
  check(id >= 0 && static_cast<std::size_t>(id) < grads_.size(),
        "grad: bad node id ", id);
  return grads_[static_cast<std::size_t>(id)];
}

// ---------------------------------------------------------------------------
// Forward

void Graph::compute(Node& n) const {
  const auto& A = [&]() -> const Node& { return nodes_[static_cast<std::size_t>(n.a)]; };
  const auto& B = [&]() -> const Node& { return nodes_[static_cast<std::size_t>(n.b)]; };
  n.vals.assign(n.shape.size(), 0.0);

  switch (n.kind) {
    case Kind::Constant:
    case Kind::Leaf:
      fail("compute called on input node");

    case Kind::Add: {
      const auto& a = A().vals;
      const auto& b = B().vals;
      if (A().shape == B().shape) {
        K().add(a.data(), b.data(), n.vals.data(), a.size());
      } else {  // row broadcast: (r,c) + (c)
        const std::size_t r = A().shape.rows, c = A().shape.cols;
        for (std::size_t i = 0; i < r; ++i)
          K().add(a.data() + i * c, b.data(), n.vals.data() + i * c, c);
      }
      break;
    }
    case Kind::Sub:
      K().sub(A().vals.data(), B().vals.data(), n.vals.data(), n.vals.size());
      break;
    case Kind::Mul:
      K().mul(A().vals.data(), B().vals.data(), n.vals.data(), n.vals.size());
      break;
    case Kind::Scale:
      K().scale(A().vals.data(), n.c0, n.vals.data(), n.vals.size());
      break;

    case Kind::MatMul: {
      const double* a = A().vals.data();
      const double* b = B().vals.data();
      if (!n.ta && !n.tb)
        K().matmul_ab(a, b, n.vals.data(), n.mm_m, n.mm_k, n.mm_n);
      else if (!n.ta && n.tb)
        K().matmul_abt(a, b, n.vals.data(), n.mm_m, n.mm_k, n.mm_n);
      else
        K().matmul_atb(a, b, n.vals.data(), n.mm_m, n.mm_k, n.mm_n);
      break;
    }

    case Kind::Relu:
      K().relu(A().vals.data(), n.vals.data(), n.vals.size());
      break;

    case Kind::Exp: {
      const auto& a = A().vals;
      for (std::size_t i = 0; i < a.size(); ++i) n.vals[i] = std::exp(a[i]);
      break;
    }
    case Kind::Log: {
      const auto& a = A().vals;
      for (std::size_t i = 0; i < a.size(); ++i) {
        check(a[i] > 0.0, "log: non-positive input at index ", i, " (value=", a[i], ")");
        n.vals[i] = std::log(a[i]);
      }
      break;
    }

    case Kind::Sum:
      n.vals[0] = K().sum(A().vals.data(), A().vals.size());
      break;
    case Kind::Mean:
      n.vals[0] = K().sum(A().vals.data(), A().vals.size()) /
                  static_cast<double>(A().vals.size());
      break;

    case Kind::DotRows: {
      const std::size_t r = n.shape.size();
      const std::size_t width = A().shape.rank == 1 ? A().shape.rows : A().shape.cols;
      for (std::size_t i = 0; i < r; ++i)
        n.vals[i] = K().dot(A().vals.data() + i * width, B().vals.data() + i * width, width);
      break;
    }

    case Kind::DotRowsAsym: {
      const std::size_t r = n.shape.size();
      const std::size_t width = A().shape.rank == 1 ? A().shape.rows : A().shape.cols;
      if (pins_) {
        const auto& pin = pins_->asym_inputs.at(pin_asym_next_++);
        const double al = n.c0;
        for (std::size_t i = 0; i < r; ++i) {
          const double live_a = K().dot(A().vals.data() + i * width, pin[1].data() + i * width, width);
          const double live_b = K().dot(pin[0].data() + i * width, B().vals.data() + i * width, width);
          n.vals[i] = al * live_a + (1.0 - al) * live_b;
        }
      } else {
        for (std::size_t i = 0; i < r; ++i)
          n.vals[i] = K().dot(A().vals.data() + i * width, B().vals.data() + i * width, width);
      }
      break;
    }

    case Kind::AsymSimMatrix: {
      const std::size_t r = A().shape.rows, k = A().shape.cols, s = B().shape.rows;
      if (pins_) {
        const auto& pin = pins_->asym_inputs.at(pin_asym_next_++);
        const double al = n.c0;
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < s; ++j) {
            const double live_a = K().dot(A().vals.data() + i * k, pin[1].data() + j * k, k);
            const double live_b = K().dot(pin[0].data() + i * k, B().vals.data() + j * k, k);
            n.vals[i * s + j] = al * live_a + (1.0 - al) * live_b;
          }
      } else {
        K().matmul_abt(A().vals.data(), B().vals.data(), n.vals.data(), r, k, s);
      }
      break;
    }

    case Kind::L2NormRows: {
      const std::size_t r = n.shape.rows, c = n.shape.cols;
      n.aux.assign(2 * r, 0.0);
      std::size_t low = 0;
      for (std::size_t i = 0; i < r; ++i) {
        const double* row = A().vals.data() + i * c;
        const double norm = std::sqrt(K().dot(row, row, c));
        const bool clamped = norm < 1e-12;
        if (norm < 1e-8) ++low;
        const double nc = clamped ? 1e-12 : norm;
        n.aux[i] = nc;
        n.aux[r + i] = clamped ? 1.0 : 0.0;
        for (std::size_t j = 0; j < c; ++j) n.vals[i * c + j] = row[j] / nc;
      }
      if (low > 0)
        log::warn("l2norm_rows: ", low, " row(s) with norm below 1e-8 (degenerate embeddings)");
      break;
    }

    case Kind::SoftmaxXent: {
      const std::size_t r = A().shape.rows, c = A().shape.cols;
      n.aux.assign(r * c, 0.0);
      std::vector<double> per_row(r);
      for (std::size_t i = 0; i < r; ++i) {
        const double* row = A().vals.data() + i * c;
        double m = row[0];
        for (std::size_t j = 1; j < c; ++j) m = row[j] > m ? row[j] : m;
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - m);
        for (std::size_t j = 0; j < c; ++j) n.aux[i * c + j] = std::exp(row[j] - m) / s;
        per_row[i] = std::log(s) + m - row[n.idx[i]];
      }
      n.vals[0] = K().sum(per_row.data(), r) / static_cast<double>(r);
      break;
    }

    case Kind::StopGrad: {
      if (pins_) {
        const auto& pinned = pins_->sg_vals.at(pin_sg_next_++);
        check(pinned.size() == n.shape.size(), "pins: stop_grad size mismatch");
        n.vals = pinned;
      } else {
        n.vals = A().vals;
      }
      break;
    }

    case Kind::GatherRows: {
      const std::size_t c = n.shape.cols;
      for (std::size_t i = 0; i < n.idx.size(); ++i)
        std::memcpy(n.vals.data() + i * c, A().vals.data() + n.idx[i] * c,
                    c * sizeof(double));
      break;
    }

    case Kind::ConcatRows: {
      std::memcpy(n.vals.data(), A().vals.data(), A().vals.size() * sizeof(double));
      std::memcpy(n.vals.data() + A().vals.size(), B().vals.data(),
                  B().vals.size() * sizeof(double));
      break;
    }

    case Kind::Reshape:
      n.vals = A().vals;
      break;
  }
}

// ---------------------------------------------------------------------------
// Backward

void Graph::backward(const Tensor& loss) {
  check(loss.g == this, "backward: tensor belongs to another graph");
  check(loss.shape().rank == 0, "backward: loss must be scalar, got ", loss.shape().str());

  grads_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    grads_[i].assign(nodes_[i].vals.size(), 0.0);
  grads_[static_cast<std::size_t>(loss.id)][0] = 1.0;

  const auto is_const = [&](int id) {
    return nodes_[static_cast<std::size_t>(id)].kind == Kind::Constant;
  };

  for (int ni = loss.id; ni >= 0; --ni) {
    const Node& n = nodes_[static_cast<std::size_t>(ni)];
    const std::vector<double>& g = grads_[static_cast<std::size_t>(ni)];
    const auto da = [&]() -> double* { return grads_[static_cast<std::size_t>(n.a)].data(); };
    const auto db = [&]() -> double* { return grads_[static_cast<std::size_t>(n.b)].data(); };
    const auto va = [&]() -> const std::vector<double>& { return nodes_[static_cast<std::size_t>(n.a)].vals; };
    const auto vb = [&]() -> const std::vector<double>& { return nodes_[static_cast<std::size_t>(n.b)].vals; };

    switch (n.kind) {
      case Kind::Constant:
      case Kind::Leaf:
      case Kind::StopGrad:
        break;  // StopGrad: gradient intentionally not propagated

      case Kind::Add: {
        if (!is_const(n.a)) K().axpy(1.0, g.data(), da(), g.size());
        if (!is_const(n.b)) {
          if (nodes_[static_cast<std::size_t>(n.a)].shape ==
              nodes_[static_cast<std::size_t>(n.b)].shape) {
            K().axpy(1.0, g.data(), db(), g.size());
          } else {
            const std::size_t r = n.shape.rows, c = n.shape.cols;
            for (std::size_t i = 0; i < r; ++i)
              K().axpy(1.0, g.data() + i * c, db(), c);
          }
        }
        break;
      }
      case Kind::Sub:
        if (!is_const(n.a)) K().axpy(1.0, g.data(), da(), g.size());
        if (!is_const(n.b)) K().axpy(-1.0, g.data(), db(), g.size());
        break;
      case Kind::Mul:
        if (!is_const(n.a)) K().mul_acc(g.data(), vb().data(), da(), g.size());
        if (!is_const(n.b)) K().mul_acc(g.data(), va().data(), db(), g.size());
        break;
      case Kind::Scale:
        if (!is_const(n.a)) K().axpy(n.c0, g.data(), da(), g.size());
        break;

      case Kind::MatMul: {
        const std::size_t m = n.mm_m, k = n.mm_k, nn = n.mm_n;
        if (!n.ta && !n.tb) {  // C = A·B : dA += G·Bᵀ, dB += Aᵀ·G
          if (!is_const(n.a)) K().matmul_abt(g.data(), vb().data(), da(), m, nn, k);
          if (!is_const(n.b)) K().matmul_atb(va().data(), g.data(), db(), k, m, nn);
        } else if (!n.ta && n.tb) {  // C = A·Bᵀ : dA += G·B, dB += Gᵀ·A
          if (!is_const(n.a)) K().matmul_ab(g.data(), vb().data(), da(), m, nn, k);
          if (!is_const(n.b)) K().matmul_atb(g.data(), va().data(), db(), nn, m, k);
        } else {  // C = Aᵀ·B : dA += B·Gᵀ, dB += A·G
          if (!is_const(n.a)) K().matmul_abt(vb().data(), g.data(), da(), k, nn, m);
          if (!is_const(n.b)) K().matmul_ab(va().data(), g.data(), db(), k, m, nn);
        }
        break;
      }

      case Kind::Relu:
        if (!is_const(n.a)) K().relu_bwd_acc(va().data(), g.data(), da(), g.size());
        break;

      case Kind::Exp:
        if (!is_const(n.a)) K().mul_acc(g.data(), n.vals.data(), da(), g.size());
        break;

      case Kind::Log: {
        if (is_const(n.a)) break;
        double* d = da();
        const auto& a = va();
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] / a[i];
        break;
      }

      case Kind::Sum:
        if (!is_const(n.a)) K().add_scalar_acc(g[0], da(), va().size());
        break;
      case Kind::Mean:
        if (!is_const(n.a))
          K().add_scalar_acc(g[0] / static_cast<double>(va().size()), da(), va().size());
        break;

      case Kind::DotRows: {
        const std::size_t r = n.vals.size();
        const std::size_t width = va().size() / r;
        for (std::size_t i = 0; i < r; ++i) {
          if (!is_const(n.a)) K().axpy(g[i], vb().data() + i * width, da() + i * width, width);
          if (!is_const(n.b)) K().axpy(g[i], va().data() + i * width, db() + i * width, width);
        }
        break;
      }

      case Kind::DotRowsAsym: {
        const std::size_t r = n.vals.size();
        const std::size_t width = va().size() / r;
        const double al = n.c0;
        for (std::size_t i = 0; i < r; ++i) {
          if (!is_const(n.a) && al != 0.0)
            K().axpy(g[i] * al, vb().data() + i * width, da() + i * width, width);
          if (!is_const(n.b) && al != 1.0)
            K().axpy(g[i] * (1.0 - al), va().data() + i * width, db() + i * width, width);
        }
        break;
      }

      case Kind::AsymSimMatrix: {
        const std::size_t r = n.shape.rows, s = n.shape.cols;
        const std::size_t k = va().size() / r;
        const double al = n.c0;
        if (!is_const(n.a) && al != 0.0) {
          std::vector<double> gs(g.size());
          K().scale(g.data(), al, gs.data(), g.size());
          K().matmul_ab(gs.data(), vb().data(), da(), r, s, k);
        }
        if (!is_const(n.b) && al != 1.0) {
          std::vector<double> gs(g.size());
          K().scale(g.data(), 1.0 - al, gs.data(), g.size());
          K().matmul_atb(gs.data(), va().data(), db(), s, r, k);
        }
        break;
      }

      case Kind::L2NormRows: {
        if (is_const(n.a)) break;
        const std::size_t r = n.shape.rows, c = n.shape.cols;
        double* d = da();
        for (std::size_t i = 0; i < r; ++i) {
          const double nc = n.aux[i];
          const bool clamped = n.aux[r + i] != 0.0;
          const double* gr = g.data() + i * c;
          const double* y = n.vals.data() + i * c;
          if (clamped) {
            for (std::size_t j = 0; j < c; ++j) d[i * c + j] += gr[j] / nc;
          } else {
            const double gy = K().dot(gr, y, c);
            for (std::size_t j = 0; j < c; ++j)
              d[i * c + j] += (gr[j] - gy * y[j]) / nc;
          }
        }
        break;
      }

      case Kind::SoftmaxXent: {
        if (is_const(n.a)) break;
        const std::size_t r = nodes_[static_cast<std::size_t>(n.a)].shape.rows;
        const std::size_t c = nodes_[static_cast<std::size_t>(n.a)].shape.cols;
        const double s = g[0] / static_cast<double>(r);
        double* d = da();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            d[i * c + j] += s * (n.aux[i * c + j] - (n.idx[i] == j ? 1.0 : 0.0));
        break;
      }

      case Kind::GatherRows: {
        if (is_const(n.a)) break;
        const std::size_t c = n.shape.cols;
        for (std::size_t i = 0; i < n.idx.size(); ++i)
          K().axpy(1.0, g.data() + i * c, da() + n.idx[i] * c, c);
        break;
      }

      case Kind::ConcatRows: {
        if (!is_const(n.a)) K().axpy(1.0, g.data(), da(), va().size());
        if (!is_const(n.b)) K().axpy(1.0, g.data() + va().size(), db(), vb().size());
        break;
      }

      case Kind::Reshape:
        if (!is_const(n.a)) K().axpy(1.0, g.data(), da(), g.size());
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Pins & replay

Pins Graph::capture_pins() const {
  Pins p;
  for (const Node& n : nodes_) {
    if (n.kind == Kind::StopGrad) {
      p.sg_vals.push_back(n.vals);
    } else if (n.kind == Kind::DotRowsAsym || n.kind == Kind::AsymSimMatrix) {
      p.asym_inputs.push_back({nodes_[static_cast<std::size_t>(n.a)].vals,
                               nodes_[static_cast<std::size_t>(n.b)].vals});
    }
  }
  return p;
}

void Graph::set_pins(const Pins* pins) {
  pins_ = pins;
  pin_sg_next_ = 0;
  pin_asym_next_ = 0;
}

bool Graph::pins_consumed() const {
  return pins_ != nullptr && pin_sg_next_ == pins_->sg_vals.size() &&
         pin_asym_next_ == pins_->asym_inputs.size();
}

bool Graph::replay_exact() const {
  check(pins_ == nullptr, "replay_exact: not available while pins are set");
  for (const Node& n : nodes_) {
    if (n.kind == Kind::Constant || n.kind == Kind::Leaf) continue;
    Node copy;
    copy.kind = n.kind;
    copy.shape = n.shape;
    copy.a = n.a;
    copy.b = n.b;
    copy.c0 = n.c0;
    copy.ta = n.ta;
    copy.tb = n.tb;
    copy.mm_m = n.mm_m;
    copy.mm_k = n.mm_k;
    copy.mm_n = n.mm_n;
    copy.idx = n.idx;
    compute(copy);
    if (copy.vals.size() != n.vals.size() || copy.aux.size() != n.aux.size()) return false;
    if (!copy.vals.empty() &&
        std::memcmp(copy.vals.data(), n.vals.data(), n.vals.size() * sizeof(double)) != 0)
      return false;
    if (!copy.aux.empty() &&
        std::memcmp(copy.aux.data(), n.aux.data(), n.aux.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Op builders

namespace {

Graph* same_graph(Tensor a, Tensor b, const char* op) {
  check(a.g != nullptr && b.g != nullptr, op, ": tensor without graph");
  check(a.g == b.g, op, ": tensors belong to different graphs");
  return a.g;
}

Node binary(Kind k, Tensor a, Tensor b, Shape out) {
  Node n;
  n.kind = k;
  n.shape = out;
  n.a = a.id;
  n.b = b.id;
  return n;
}

Node unary(Kind k, Tensor a, Shape out) {
  Node n;
  n.kind = k;
  n.shape = out;
  n.a = a.id;
  return n;
}

}  // namespace

Tensor add(Tensor a, Tensor b) {
  Graph* g = same_graph(a, b, "add");
  if (a.shape() == b.shape())
    return g->emit(binary(Kind::Add, a, b, a.shape()));
  const bool bc = a.shape().rank == 2 && b.shape().rank == 1 &&
                  b.shape().rows == a.shape().cols;
  check(bc, "add: shape mismatch ", a.shape().str(), " vs ", b.shape().str());
  return g->emit(binary(Kind::Add, a, b, a.shape()));
}

Tensor sub(Tensor a, Tensor b) {
  Graph* g = same_graph(a, b, "sub");
  check(a.shape() == b.shape(), "sub: shape mismatch ", a.shape().str(), " vs ",
        b.shape().str());
  return g->emit(binary(Kind::Sub, a, b, a.shape()));
}

Tensor mul(Tensor a, Tensor b) {
  Graph* g = same_graph(a, b, "mul");
  check(a.shape() == b.shape(), "mul: shape mismatch ", a.shape().str(), " vs ",
        b.shape().str());
  return g->emit(binary(Kind::Mul, a, b, a.shape()));
}

Tensor scale(Tensor x, double s) {
  check(std::isfinite(s), "scale: factor must be finite");
  Node n = unary(Kind::Scale, x, x.shape());
  n.c0 = s;
  return x.g->emit(std::move(n));
}

Tensor matmul(Tensor a, Tensor b, bool ta, bool tb) {
  Graph* g = same_graph(a, b, "matmul");
  check(!(ta && tb), "matmul: ta && tb unsupported");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  check(sa.rank == 2, "matmul: lhs must be rank 2, got ", sa.str());
  check(sb.rank == 2 || sb.rank == 1, "matmul: rhs must be rank 1 or 2, got ", sb.str());
  check(!(sb.rank == 1 && tb), "matmul: rank-1 rhs cannot be transposed");

  std::size_t m, k, n;
  Shape out;
  if (sb.rank == 1) {
    if (!ta) {  // A(m,k)·v(k)
      check(sa.cols == sb.rows, "matmul: inner dim mismatch ", sa.str(), " vs ", sb.str());
      m = sa.rows; k = sa.cols; n = 1;
      out = Shape::vec(m);
      Node nd = binary(Kind::MatMul, a, b, out);
      nd.ta = false; nd.tb = false; nd.mm_m = m; nd.mm_k = k; nd.mm_n = n;
      return g->emit(std::move(nd));
    }
    // Aᵀ(k,m)ᵀ·v(k)
    check(sa.rows == sb.rows, "matmul: inner dim mismatch ", sa.str(), " vs ", sb.str());
    m = sa.cols; k = sa.rows; n = 1;
    out = Shape::vec(m);
    Node nd = binary(Kind::MatMul, a, b, out);
    nd.ta = true; nd.tb = false; nd.mm_m = m; nd.mm_k = k; nd.mm_n = n;
    return g->emit(std::move(nd));
  }

  if (!ta && !tb) {
    check(sa.cols == sb.rows, "matmul: inner dim mismatch ", sa.str(), " vs ", sb.str());
    m = sa.rows; k = sa.cols; n = sb.cols;
  } else if (!ta && tb) {
    check(sa.cols == sb.cols, "matmul: inner dim mismatch ", sa.str(), " vs ", sb.str(), " (tb)");
    m = sa.rows; k = sa.cols; n = sb.rows;
  } else {
    check(sa.rows == sb.rows, "matmul: inner dim mismatch ", sa.str(), " vs ", sb.str(), " (ta)");
    m = sa.cols; k = sa.rows; n = sb.cols;
  }
  out = Shape::mat(m, n);
  Node nd = binary(Kind::MatMul, a, b, out);
  nd.ta = ta; nd.tb = tb; nd.mm_m = m; nd.mm_k = k; nd.mm_n = n;
  return g->emit(std::move(nd));
}

Tensor relu(Tensor x) { return x.g->emit(unary(Kind::Relu, x, x.shape())); }
Tensor vexp(Tensor x) { return x.g->emit(unary(Kind::Exp, x, x.shape())); }
Tensor vlog(Tensor x) { return x.g->emit(unary(Kind::Log, x, x.shape())); }

Tensor sum(Tensor x) { return x.g->emit(unary(Kind::Sum, x, Shape::scalar())); }
Tensor mean(Tensor x) {
  check(x.shape().size() > 0, "mean: empty tensor");
  return x.g->emit(unary(Kind::Mean, x, Shape::scalar()));
}

namespace {
Shape dot_rows_shape(const Shape& sa, const Shape& sb, const char* op) {
  check(sa == sb, op, ": shape mismatch ", sa.str(), " vs ", sb.str());
  check(sa.rank >= 1, op, ": inputs must be rank 1 or 2");
  return sa.rank == 1 ? Shape::scalar() : Shape::vec(sa.rows);
}
}  // namespace

Tensor dot_rows(Tensor a, Tensor b) {
  Graph* g = same_graph(a, b, "dot_rows");
  return g->emit(binary(Kind::DotRows, a, b, dot_rows_shape(a.shape(), b.shape(), "dot_rows")));
}

Tensor sim_alpha(Tensor a, Tensor b, double alpha) {
  Graph* g = same_graph(a, b, "sim_alpha");
  check(alpha >= 0.0 && alpha <= 1.0, "sim_alpha: alpha must be in [0,1], got ", alpha);
  Node n = binary(Kind::DotRowsAsym, a, b, dot_rows_shape(a.shape(), b.shape(), "sim_alpha"));
  n.c0 = alpha;
  return g->emit(std::move(n));
}

Tensor asym_sim_matrix(Tensor a, Tensor b, double alpha) {
  Graph* g = same_graph(a, b, "asym_sim_matrix");
  check(alpha >= 0.0 && alpha <= 1.0, "asym_sim_matrix: alpha must be in [0,1], got ", alpha);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  check(sa.rank == 2 && sb.rank == 2, "asym_sim_matrix: inputs must be rank 2");
  check(sa.cols == sb.cols, "asym_sim_matrix: width mismatch ", sa.str(), " vs ", sb.str());
  Node n = binary(Kind::AsymSimMatrix, a, b, Shape::mat(sa.rows, sb.rows));
  n.c0 = alpha;
  return g->emit(std::move(n));
}

Tensor l2norm_rows(Tensor x) {
  check(x.shape().rank == 2, "l2norm_rows: input must be rank 2, got ", x.shape().str());
  return x.g->emit(unary(Kind::L2NormRows, x, x.shape()));
}

Tensor softmax_xent(Tensor logits, const std::vector<std::size_t>& labels) {
  const Shape& s = logits.shape();
  check(s.rank == 2, "softmax_xent: logits must be rank 2, got ", s.str());
  check(labels.size() == s.rows, "softmax_xent: ", labels.size(), " labels for ",
        s.rows, " rows");
  for (std::size_t i = 0; i < labels.size(); ++i)
    check(labels[i] < s.cols, "softmax_xent: label ", labels[i], " out of range at row ", i);
  Node n = unary(Kind::SoftmaxXent, logits, Shape::scalar());
  n.idx = labels;
  return logits.g->emit(std::move(n));
}

Tensor stop_grad(Tensor x) { return x.g->emit(unary(Kind::StopGrad, x, x.shape())); }

Tensor gather_rows(Tensor x, std::vector<std::size_t> idx) {
  const Shape& s = x.shape();
  check(s.rank == 2, "gather_rows: input must be rank 2, got ", s.str());
  for (std::size_t i : idx)
    check(i < s.rows, "gather_rows: index ", i, " out of range (rows=", s.rows, ")");
  Node n = unary(Kind::GatherRows, x, Shape::mat(idx.size(), s.cols));
  n.idx = std::move(idx);
  return x.g->emit(std::move(n));
}

Tensor concat_rows(Tensor a, Tensor b) {
  Graph* g = same_graph(a, b, "concat_rows");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  check(sa.rank == 2 && sb.rank == 2, "concat_rows: inputs must be rank 2");
  check(sa.cols == sb.cols, "concat_rows: width mismatch ", sa.str(), " vs ", sb.str());
  return g->emit(binary(Kind::ConcatRows, a, b, Shape::mat(sa.rows + sb.rows, sa.cols)));
}

Tensor reshape(Tensor x, Shape s) {
  check(s.size() == x.shape().size(), "reshape: element count mismatch ",
        x.shape().str(), " vs ", s.str());
  return x.g->emit(unary(Kind::Reshape, x, s));
}

// ---------------------------------------------------------------------------
// Finite differences

FdReport finite_diff_check(
    const BuildFn& build,
    const std::vector<std::pair<Shape, std::vector<double>>>& theta,
    double eps) {
  check(eps > 0.0, "finite_diff_check: eps must be positive");
  for (const auto& [s, v] : theta)
    check(v.size() == s.size(), "finite_diff_check: leaf value count mismatch");

  const auto build_leaves = [&](Graph& g,
                                const std::vector<std::vector<double>>& vals) {
    std::vector<Tensor> leaves;
    leaves.reserve(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
      leaves.push_back(g.leaf(theta[i].first, vals[i]));
    return leaves;
  };

  std::vector<std::vector<double>> base_vals;
  for (const auto& [s, v] : theta) base_vals.push_back(v);

  Graph g0;
  std::vector<Tensor> leaves0 = build_leaves(g0, base_vals);
  Tensor loss0 = build(g0, leaves0);
  check(loss0.shape().rank == 0, "finite_diff_check: build must return a scalar");
  check(std::isfinite(loss0.scalar_val()),
        "finite_diff_check: non-finite loss at base point");
  g0.backward(loss0);

  std::vector<std::vector<double>> analytic;
  for (const Tensor& t : leaves0) analytic.push_back(t.grad());

  // Leaves reachable from the loss without crossing frozen branches.
  std::vector<bool> active(g0.node_count(), false);
  {
    std::vector<int> stack{loss0.id};
    std::vector<bool> seen(g0.node_count(), false);
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(id)]) continue;
      seen[static_cast<std::size_t>(id)] = true;
      active[static_cast<std::size_t>(id)] = true;
      const Node& n = g0.node(id);
      if (n.kind == Kind::StopGrad) continue;
      bool walk_a = n.a >= 0, walk_b = n.b >= 0;
      if (n.kind == Kind::DotRowsAsym || n.kind == Kind::AsymSimMatrix) {
        walk_a = walk_a && n.c0 != 0.0;
        walk_b = walk_b && n.c0 != 1.0;
      }
      if (walk_a) stack.push_back(n.a);
      if (walk_b) stack.push_back(n.b);
    }
  }

  const Pins pins = g0.capture_pins();

  FdReport report;
  std::vector<FdIssue> issues;
  bool structure_checked = false;

  const auto eval_at = [&](const std::vector<std::vector<double>>& vals) {
    Graph g;
    g.set_pins(&pins);
    std::vector<Tensor> leaves = build_leaves(g, vals);
    Tensor loss = build(g, leaves);
    check(loss.shape().rank == 0, "finite_diff_check: build must return a scalar");
    check(g.pins_consumed(),
          "finite_diff_check: build function is not deterministic "
          "(frozen-branch structure changed between evaluations)");
    if (!structure_checked) {
      check(g.node_count() == g0.node_count(),
            "finite_diff_check: build function is not deterministic "
            "(node count changed between evaluations)");
      structure_checked = true;
    }
    const double v = loss.scalar_val();
    check(std::isfinite(v), "finite_diff_check: non-finite loss at perturbed point");
    return v;
  };

  std::vector<std::vector<double>> work = base_vals;
  for (std::size_t li = 0; li < theta.size(); ++li) {
    if (!active[static_cast<std::size_t>(leaves0[li].id)]) {
      for (double gv : analytic[li])
        check(gv == 0.0,
              "finite_diff_check: internal inconsistency: frozen leaf ", li,
              " received a non-zero gradient");
      report.skipped_leaves.push_back(li);
      continue;
    }
    for (std::size_t c = 0; c < base_vals[li].size(); ++c) {
      const double orig = work[li][c];
      work[li][c] = orig + eps;
      const double fp = eval_at(work);
      work[li][c] = orig - eps;
      const double fm = eval_at(work);
      work[li][c] = orig;

      const double fd = (fp - fm) / (2.0 * eps);
      const double an = analytic[li][c];
      const double rel = std::abs(an - fd) / std::max(1.0, std::abs(fd));
      ++report.checked;
      if (rel > report.max_rel) report.max_rel = rel;
      if (rel > 1e-12) issues.push_back({li, c, an, fd, rel});
    }
  }

  std::sort(issues.begin(), issues.end(),
            [](const FdIssue& x, const FdIssue& y) { return x.rel > y.rel; });
  if (issues.size() > 8) issues.resize(8);
  report.worst = std::move(issues);
  return report;
}

}  // namespace ainc::ag

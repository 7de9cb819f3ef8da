#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ainc/common.hpp"

namespace ainc::ag {

// Shapes are rank 0 (scalar), rank 1 (column vector, stored (n,1)) or rank 2
// (row-major matrix). Values are always a dense f64 buffer of rows*cols.
struct Shape {
  std::uint8_t rank = 2;
  std::size_t rows = 0, cols = 0;

  static Shape scalar() { return {0, 1, 1}; }
  static Shape vec(std::size_t n) { return {1, n, 1}; }
  static Shape mat(std::size_t r, std::size_t c) { return {2, r, c}; }

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape& o) const {
    return rank == o.rank && rows == o.rows && cols == o.cols;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }
  std::string str() const;
};

enum class Kind : std::uint8_t {
  Constant,
  Leaf,
  Add,          // same shape, or (r,c) + rank-1 (c) row broadcast
  Sub,
  Mul,          // elementwise
  Scale,        // c0 * x
  MatMul,       // transpose flags ta/tb; ta&&tb unsupported
  Relu,
  Exp,
  Log,          // rejects non-positive inputs
  Sum,          // all elements -> scalar
  Mean,
  DotRows,      // per-row dot; rank-1 inputs -> scalar
  DotRowsAsym,  // value = per-row dot; backward: a gets alpha, b gets 1-alpha
  AsymSimMatrix,  // value = A·Bᵀ; backward: dA += alpha·G·B, dB += (1-alpha)·Gᵀ·A
  L2NormRows,   // rows scaled to unit norm (norms < 1e-12 clamped)
  SoftmaxXent,  // mean cross-entropy over rows against integer labels
  StopGrad,     // identity value, blocks gradient
  GatherRows,   // rows re-indexed (repeats allowed); backward scatter-adds
  ConcatRows,   // rows of a then rows of b
  Reshape,      // same element count, new shape; value/gradient pass through
};

const char* kind_name(Kind k);

struct Node {
  Kind kind;
  Shape shape;
  int a = -1, b = -1;                // parent node ids
  double c0 = 0.0;                   // Scale factor / asymmetric alpha
  bool ta = false, tb = false;       // MatMul transpose flags
  std::size_t mm_m = 0, mm_k = 0, mm_n = 0;  // effective MatMul dims
  std::vector<std::size_t> idx;      // GatherRows indices / SoftmaxXent labels
  std::vector<double> vals;
  std::vector<double> aux;           // saved forward intermediates
};

class Graph;

struct Tensor {
  Graph* g = nullptr;
  int id = -1;

  const Shape& shape() const;
  const std::vector<double>& vals() const;
  const std::vector<double>& grad() const;  // valid after Graph::backward
  double scalar_val() const;
};

// Base-point values for frozen branches, captured from an unperturbed graph.
// While pins are set, StopGrad nodes reproduce their captured value and the
// asymmetric-similarity nodes evaluate
//   alpha·dot(a_current, b_base) + (1-alpha)·dot(a_base, b_current),
// which is the function whose exact gradient the backward pass computes.
// Pin entries are matched to nodes by creation order, so the same build
// procedure must be replayed (finite_diff_check validates this).
struct Pins {
  std::vector<std::vector<double>> sg_vals;
  std::vector<std::array<std::vector<double>, 2>> asym_inputs;
};

// Define-by-run tape: every op computes its value eagerly at creation and the
// backward pass walks nodes in reverse creation order, so gradient
// accumulation order is fixed and runs are bit-reproducible.
class Graph {
 public:
  Tensor constant(Shape s, std::vector<double> vals);
  Tensor scalar_const(double v);
  Tensor leaf(Shape s, std::vector<double> vals);

  // Internal: validated by the op builders below.
  Tensor emit(Node&& n);

  void backward(const Tensor& loss);
  bool has_grads() const { return !grads_.empty(); }
  const std::vector<double>& grad(int id) const;

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t node_count() const { return nodes_.size(); }

  Pins capture_pins() const;
  void set_pins(const Pins* pins);  // nullptr to clear
  bool pins_consumed() const;

  // Recomputes every node from its parents and compares bit-for-bit with the
  // stored values. Returns true when the tape replays exactly.
  bool replay_exact() const;

 private:
  friend struct Tensor;
  void compute(Node& n) const;  // forward of a single node (uses pins_ if set)

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  const Pins* pins_ = nullptr;
  mutable std::size_t pin_sg_next_ = 0;
  mutable std::size_t pin_asym_next_ = 0;
};

// Op builders.
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor scale(Tensor x, double s);
Tensor matmul(Tensor a, Tensor b, bool ta = false, bool tb = false);
Tensor relu(Tensor x);
Tensor vexp(Tensor x);
Tensor vlog(Tensor x);
Tensor sum(Tensor x);
Tensor mean(Tensor x);
Tensor dot_rows(Tensor a, Tensor b);
Tensor sim_alpha(Tensor a, Tensor b, double alpha);  // DotRowsAsym
Tensor asym_sim_matrix(Tensor a, Tensor b, double alpha);
Tensor l2norm_rows(Tensor x);
Tensor softmax_xent(Tensor logits, const std::vector<std::size_t>& labels);
Tensor stop_grad(Tensor x);
Tensor gather_rows(Tensor x, std::vector<std::size_t> idx);
Tensor concat_rows(Tensor a, Tensor b);
Tensor reshape(Tensor x, Shape s);

// Central-difference gradient validation.
//
// `build` must be deterministic: called repeatedly with leaves holding
// perturbed values, it must create the same node structure every time.
// Frozen branches (StopGrad, the frozen side of the asymmetric similarity)
// are pinned to their base-point values during re-evaluation, so the measured
// derivative is exactly the one backward computes. Leaves consumed only
// through frozen paths are skipped and reported.
struct FdIssue {
  std::size_t leaf = 0, component = 0;
  double analytic = 0.0, fd = 0.0, rel = 0.0;
};

struct FdReport {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::vector<std::size_t> skipped_leaves;
  std::vector<FdIssue> worst;  // up to 8, largest first
  bool ok(double tol) const { return checked == 0 || max_rel < tol; }
};

using BuildFn = std::function<Tensor(Graph&, const std::vector<Tensor>&)>;

FdReport finite_diff_check(
    const BuildFn& build,
    const std::vector<std::pair<Shape, std::vector<double>>>& theta,
    double eps = 1e-6);

}  // namespace ainc::ag

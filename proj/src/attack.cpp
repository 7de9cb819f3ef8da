#include "ainc/attack.hpp"

#include <cmath>

#include "ainc/common.hpp"

namespace ainc {

void AttackConfig::validate() const {
  check(std::isfinite(epsilon) && epsilon >= 0.0, "attack: epsilon must be finite and >= 0, got ",
        epsilon);
  check(std::isfinite(step_size) && step_size > 0.0, "attack: step_size must be > 0, got ",
        step_size);
  check(steps >= 1, "attack: steps must be >= 1, got ", steps);
  check(std::isfinite(input_lo) && std::isfinite(input_hi) && input_lo < input_hi,
        "attack: input range [", input_lo, ", ", input_hi, ") is invalid");
}

std::vector<double> pgd_attack(const std::vector<double>& x, std::size_t rows, std::size_t cols,
                               const AttackConfig& cfg, Rng& rng, const AdvLossFn& build_loss,
                               const AttackObserver& observer) {
  cfg.validate();
  const std::size_t n = rows * cols;
  check(rows >= 1 && cols >= 1 && x.size() == n, "attack: input buffer has ", x.size(),
        " values, expected ", rows, "x", cols);

  std::vector<double> adv = x;
  if (cfg.epsilon == 0.0) return adv;  // identity; no RNG consumed

  const double eps = cfg.epsilon, lo = cfg.input_lo, hi = cfg.input_hi;
  if (cfg.random_start) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = x[i] + rng.uniform(-eps, eps);
      adv[i] = v < lo ? lo : (v > hi ? hi : v);
    }
  }

  for (int it = 0; it < cfg.steps; ++it) {
    ag::Graph g;
    ag::Tensor xt = g.leaf(ag::Shape::mat(rows, cols), adv);
    ag::Tensor loss = build_loss(g, xt);
    check(loss.shape().rank == 0, "attack: objective must be scalar, got shape ",
          loss.shape().str());
    check(std::isfinite(loss.scalar_val()), "attack: objective is non-finite at iteration ", it);
    g.backward(loss);
    const std::vector<double>& grad = g.grad(xt.id);
    for (std::size_t i = 0; i < n; ++i) {
      double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
      double v = adv[i] + cfg.step_size * s;
      double d = v - x[i];  // project into the L∞ ball, then into range
      d = d < -eps ? -eps : (d > eps ? eps : d);
      v = x[i] + d;
      adv[i] = v < lo ? lo : (v > hi ? hi : v);
    }
    if (observer) observer(it, adv);
  }
  return adv;
}

std::vector<double> pgd_contrastive(const Encoder& enc, const std::vector<double>& source,
                                    const std::vector<double>& z_clean, std::size_t b,
                                    const loss::LossConfig& loss_cfg, double alpha_now,
                                    const AttackConfig& cfg, Rng& rng,
                                    const AttackObserver& observer) {
  const std::size_t dim = enc.config().input_dim;
  const std::size_t k = enc.config().proj_dim;
  check(b >= 2, "attack: contrastive objective needs batch size >= 2, got ", b);
  check(source.size() == b * dim, "attack: source buffer has ", source.size(),
        " values, expected ", b, "x", dim);
  check(z_clean.size() == 2 * b * k, "attack: clean embedding buffer has ", z_clean.size(),
        " values, expected ", 2 * b, "x", k);

  AdvLossFn fn = [&](ag::Graph& g, ag::Tensor x_adv) {
    Encoder::Bound bound = enc.bind(g, /*frozen=*/true);
    ag::Tensor zc = g.constant(ag::Shape::mat(2 * b, k), z_clean);
    Encoder::Encoded e = enc.encode(g, bound, x_adv);
    ag::Tensor z_full = ag::concat_rows(zc, e.z);
    return loss::build_loss(g, z_full, b, loss_cfg, alpha_now, nullptr);
  };
  return pgd_attack(source, b, dim, cfg, rng, fn, observer);
}

std::vector<double> pgd_supervised(const Encoder& enc, const LinearClassifier& clf,
                                   const std::vector<double>& x,
                                   const std::vector<std::size_t>& labels,
                                   const AttackConfig& cfg, Rng& rng,
                                   const AttackObserver& observer) {
  const std::size_t dim = enc.config().input_dim;
  check(dim > 0 && x.size() % dim == 0, "attack: input buffer has ", x.size(),
        " values, not a multiple of input dim ", dim);
  const std::size_t rows = x.size() / dim;
  check(labels.size() == rows, "attack: got ", labels.size(), " labels for ", rows, " rows");

  AdvLossFn fn = [&](ag::Graph& g, ag::Tensor x_adv) {
    Encoder::Bound eb = enc.bind(g, /*frozen=*/true);
    LinearClassifier::Bound cb = clf.bind(g, /*frozen=*/true);
    Encoder::Encoded e = enc.encode(g, eb, x_adv);
    ag::Tensor logits = clf.logits(g, cb, e.h);
    return ag::softmax_xent(logits, labels);
  };
  return pgd_attack(x, rows, dim, cfg, rng, fn, observer);
}

}  // namespace ainc

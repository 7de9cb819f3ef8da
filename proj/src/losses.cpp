#include "ainc/losses.hpp"

#include <cmath>

#include "ainc/kernels.hpp"

namespace ainc::loss {

using ag::Tensor;

const char* weight_mode_name(WeightMode m) {
  return m == WeightMode::uniform ? "uniform" : "similarity";
}
const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::infonce: return "infonce";
    case LossKind::ip: return "ip";
    case LossKind::hn: return "hn";
    case LossKind::ip_hn: return "ip_hn";
  }
  return "?";
}
WeightMode weight_mode_from_name(const std::string& s) {
  if (s == "uniform") return WeightMode::uniform;
  if (s == "similarity") return WeightMode::similarity;
  fail("unknown weight_mode '", s, "' (uniform|similarity)");
}
LossKind loss_kind_from_name(const std::string& s) {
  if (s == "infonce") return LossKind::infonce;
  if (s == "ip") return LossKind::ip;
  if (s == "hn") return LossKind::hn;
  if (s == "ip_hn") return LossKind::ip_hn;
  fail("unknown loss kind '", s, "' (infonce|ip|hn|ip_hn)");
}

void LossConfig::validate() const {
  check(temperature > 0.0, "loss: temperature must be positive, got ", temperature);
  check(alpha >= 0.0 && alpha <= 1.0, "loss: alpha must be in [0,1], got ", alpha);
  check(gamma >= 0.0, "loss: gamma must be non-negative, got ", gamma);
  check(tau >= 0.0 && tau < 1.0, "loss: tau must be in [0,1), got ", tau);
}

// ---------------------------------------------------------------------------
// Value helpers

std::vector<double> pairwise_cosine(const std::vector<double>& z, std::size_t rows,
                                    std::size_t cols) {
  check(rows > 0 && cols > 0, "pairwise_cosine: empty input");
  check(z.size() == rows * cols, "pairwise_cosine: buffer size mismatch");
  const auto& k = kern::ops();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = z.data() + i * cols;
    const double norm = std::sqrt(k.dot(row, row, cols));
    check(std::abs(norm - 1.0) <= 1e-6, "pairwise_cosine: row ", i,
          " is not unit norm (norm=", norm, ")");
  }
  std::vector<double> s(rows * rows, 0.0);
  k.matmul_abt(z.data(), z.data(), s.data(), rows, cols, rows);
  return s;
}

std::vector<double> pair_weights(const std::vector<double>& sims, WeightMode mode,
                                 double t) {
  check(t > 0.0, "pair_weights: temperature must be positive");
  std::vector<double> w(sims.size(), 1.0);
  if (mode == WeightMode::similarity)
    for (std::size_t i = 0; i < sims.size(); ++i) w[i] = std::exp(sims[i] / t);
  return w;
}

double lambda_pos_coeff(std::size_t m, std::size_t n, double tau) {
  check(m >= 1, "lambda_pos_coeff: M must be at least 1");
  check(tau >= 0.0 && tau < 1.0, "lambda_pos_coeff: tau must be in [0,1), got ", tau);
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  return (md - (md + nd) * tau) / (md * (1.0 - tau));
}

// ---------------------------------------------------------------------------
// Per-pair ops

Tensor a_infonce_pair(ag::Graph& g, Tensor zi, Tensor zj, Tensor negs, double t,
                      double alpha, double lam_p, const std::vector<double>& lam_n) {
  check(t > 0.0, "a_infonce: temperature must be positive, got ", t);
  check(alpha >= 0.0 && alpha <= 1.0, "a_infonce: alpha must be in [0,1], got ", alpha);
  check(lam_p > 0.0, "a_infonce: lambda_p must be positive, got ", lam_p);
  check(zi.shape().rank == 1 && zj.shape().rank == 1,
        "a_infonce: zi/zj must be rank 1");
  check(zi.shape() == zj.shape(), "a_infonce: zi/zj shape mismatch");
  check(negs.shape().rank == 2, "a_infonce: negatives must be rank 2");
  const std::size_t kdim = zi.shape().rows;
  const std::size_t n = negs.shape().rows;
  check(negs.shape().cols == kdim, "a_infonce: negative width ", negs.shape().cols,
        " != embedding width ", kdim);
  check(lam_n.size() == n, "a_infonce: ", lam_n.size(), " lambda_n entries for ", n,
        " negatives");
  for (std::size_t i = 0; i < lam_n.size(); ++i)
    check(lam_n[i] >= 0.0 && std::isfinite(lam_n[i]),
          "a_infonce: lambda_n[", i, "] must be finite and non-negative");

  Tensor pos = ag::sim_alpha(zi, zj, alpha);  // scalar
  Tensor num = ag::vexp(ag::scale(pos, 1.0 / t));
  if (lam_p != 1.0) num = ag::scale(num, lam_p);

  Tensor denom = num;
  if (n > 0) {
    Tensor zi_row = ag::reshape(zi, ag::Shape::mat(1, kdim));
    Tensor s_neg = ag::asym_sim_matrix(zi_row, negs, alpha);  // (1, n)
    Tensor e_neg = ag::vexp(ag::scale(s_neg, 1.0 / t));
    Tensor weighted = ag::mul(e_neg, g.constant(ag::Shape::mat(1, n), lam_n));
    denom = ag::add(num, ag::sum(weighted));
  }
  return ag::sub(ag::vlog(denom), ag::vlog(num));
}

Tensor infonce_pair(ag::Graph& g, Tensor zi, Tensor zj, Tensor negs, double t) {
  const std::size_t n = negs.shape().rank == 2 ? negs.shape().rows : 0;
  return a_infonce_pair(g, zi, zj, negs, t, 0.5, 1.0, std::vector<double>(n, 1.0));
}

Tensor debiased_negative_mass(ag::Graph& g, Tensor neg_sims, Tensor pos_sims,
                              const std::vector<double>& w_n,
                              const std::vector<double>& w_p, double tau, double t) {
  check(t > 0.0, "debiased_negative_mass: temperature must be positive");
  check(tau >= 0.0 && tau < 1.0, "debiased_negative_mass: tau must be in [0,1), got ", tau);
  check(neg_sims.shape().rank == 1, "debiased_negative_mass: neg_sims must be rank 1");
  check(pos_sims.shape().rank == 1, "debiased_negative_mass: pos_sims must be rank 1");
  const std::size_t n = neg_sims.shape().rows;
  const std::size_t m = pos_sims.shape().rows;
  check(w_n.size() == n, "debiased_negative_mass: weight count mismatch (negatives)");
  check(w_p.size() == m, "debiased_negative_mass: weight count mismatch (positives)");
  check(!(tau > 0.0 && m == 0),
        "debiased_negative_mass: tau > 0 requires at least one positive");

  Tensor e_n = ag::vexp(ag::scale(neg_sims, 1.0 / t));
  Tensor s_n = ag::sum(ag::mul(e_n, g.constant(ag::Shape::vec(n), w_n)));

  Tensor raw = s_n;
  if (tau > 0.0) {
    Tensor e_p = ag::vexp(ag::scale(pos_sims, 1.0 / t));
    Tensor s_p = ag::sum(ag::mul(e_p, g.constant(ag::Shape::vec(m), w_p)));
    const double coef = (static_cast<double>(n) / static_cast<double>(m)) * tau;
    raw = ag::sub(s_n, ag::scale(s_p, coef));
  }
  raw = ag::scale(raw, 1.0 / (1.0 - tau));

  const double floor = static_cast<double>(n) * std::exp(-1.0 / t);
  Tensor floor_c = g.scalar_const(floor);
  return ag::add(raw, ag::relu(ag::sub(floor_c, raw)));
}

// ---------------------------------------------------------------------------
// Batched losses

namespace {

enum class PosKind { clean, adv };

struct Layout {
  std::size_t b = 0;
  std::size_t anchors() const { return 2 * b; }
  std::size_t rows() const { return 3 * b; }
  std::size_t instance(std::size_t row) const { return row % b; }
  std::size_t clean_pos(std::size_t anchor) const {
    return anchor < b ? anchor + b : anchor - b;
  }
  std::size_t adv_pos(std::size_t anchor) const { return 2 * b + anchor % b; }
};

void validate_z(Tensor z, std::size_t b, double t) {
  check(b >= 1, "loss: batch size must be at least 1");
  check(t > 0.0, "loss: temperature must be positive, got ", t);
  const ag::Shape& s = z.shape();
  check(s.rank == 2, "loss: Z must be rank 2, got ", s.str());
  check(s.rows == 3 * b, "loss: Z has ", s.rows, " rows, expected 3B=", 3 * b,
        " (missing adversarial views?)");
  const auto& k = kern::ops();
  const auto& v = z.vals();
  for (std::size_t i = 0; i < s.rows; ++i) {
    const double* row = v.data() + i * s.cols;
    const double norm = std::sqrt(k.dot(row, row, s.cols));
    check(std::abs(norm - 1.0) <= 1e-6, "loss: Z row ", i,
          " is not unit norm (norm=", norm, ")");
  }
}

// One anchor group: every clean row against its positive of kind `pos`.
// debias=false: plain uniform negatives (lambda_n = 1), tau ignored.
// debias=true: PU-corrected weighted mass with clamp floor.
Tensor group_loss(ag::Graph& g, Tensor z, const Layout& lay, PosKind pos, double alpha,
                  bool debias, double tau, WeightMode wm, double t) {
  const std::size_t a_cnt = lay.anchors();
  const std::size_t rows = lay.rows();
  const std::size_t n_neg = 3 * (lay.b - 1);

  std::vector<std::size_t> anchor_idx(a_cnt), pos_idx(a_cnt);
  for (std::size_t a = 0; a < a_cnt; ++a) {
    anchor_idx[a] = a;
    pos_idx[a] = pos == PosKind::clean ? lay.clean_pos(a) : lay.adv_pos(a);
  }

  Tensor anchors = ag::gather_rows(z, anchor_idx);
  Tensor positives = ag::gather_rows(z, pos_idx);
  Tensor pos_sim = ag::sim_alpha(anchors, positives, alpha);      // (2B)
  Tensor s_all = ag::asym_sim_matrix(anchors, z, alpha);          // (2B, 3B)
  Tensor e_all = ag::vexp(ag::scale(s_all, 1.0 / t));

  // Negative weights: the structural mask zeroes same-instance columns and
  // folds the 1/(1−τ) estimator factor; similarity weights ride on top as a
  // gradient-stopped factor (importance weights, not a learnable signal).
  const double neg_fac = debias ? 1.0 / (1.0 - tau) : 1.0;
  std::vector<double> c_neg(a_cnt * rows, 0.0);
  for (std::size_t a = 0; a < a_cnt; ++a)
    for (std::size_t v = 0; v < rows; ++v)
      if (lay.instance(v) != lay.instance(a)) c_neg[a * rows + v] = neg_fac;

  Tensor weights = g.constant(ag::Shape::mat(a_cnt, rows), c_neg);
  if (debias && wm == WeightMode::similarity) {
    Tensor s_sym = ag::stop_grad(ag::matmul(anchors, z, false, true));
    weights = ag::mul(ag::vexp(ag::scale(s_sym, 1.0 / t)), weights);
  }

  Tensor ones = g.constant(ag::Shape::vec(rows), std::vector<double>(rows, 1.0));
  Tensor mass = ag::matmul(ag::mul(e_all, weights), ones);  // (2B)

  if (debias) {
    if (tau > 0.0) {
      // PU correction over the anchor's M=2 positives (w_p = 1).
      const double coef =
          (static_cast<double>(n_neg) / 2.0) * tau / (1.0 - tau);
      std::vector<double> c_pos(a_cnt * rows, 0.0);
      for (std::size_t a = 0; a < a_cnt; ++a) {
        c_pos[a * rows + lay.clean_pos(a)] = coef;
        c_pos[a * rows + lay.adv_pos(a)] = coef;
      }
      Tensor corr = ag::matmul(
          ag::mul(e_all, g.constant(ag::Shape::mat(a_cnt, rows), c_pos)), ones);
      mass = ag::sub(mass, corr);
    }
    const double floor = static_cast<double>(n_neg) * std::exp(-1.0 / t);
    Tensor floor_v =
        g.constant(ag::Shape::vec(a_cnt), std::vector<double>(a_cnt, floor));
    mass = ag::add(mass, ag::relu(ag::sub(floor_v, mass)));
  }

  Tensor num = ag::vexp(ag::scale(pos_sim, 1.0 / t));  // (2B)
  Tensor per_anchor = ag::sub(ag::vlog(ag::add(num, mass)), ag::vlog(num));
  return ag::sum(per_anchor);
}

Tensor combine(ag::Graph& g, Tensor clean, Tensor adv, double gamma, LossTerms* terms) {
  (void)g;
  if (terms != nullptr) *terms = {clean, adv};
  return ag::add(clean, ag::scale(adv, gamma));
}

}  // namespace

Tensor loss_infonce(ag::Graph& g, Tensor z, std::size_t b, double t, LossTerms* terms) {
  validate_z(z, b, t);
  Layout lay{b};
  Tensor clean = group_loss(g, z, lay, PosKind::clean, 0.5, false, 0.0,
                            WeightMode::uniform, t);
  Tensor adv = group_loss(g, z, lay, PosKind::adv, 0.5, false, 0.0,
                          WeightMode::uniform, t);
  return combine(g, clean, adv, 1.0, terms);
}

Tensor loss_ip(ag::Graph& g, Tensor z, std::size_t b, double alpha, double gamma,
               double t, LossTerms* terms) {
  validate_z(z, b, t);
  check(alpha >= 0.0 && alpha <= 1.0, "loss_ip: alpha must be in [0,1], got ", alpha);
  check(gamma >= 0.0, "loss_ip: gamma must be non-negative, got ", gamma);
  Layout lay{b};
  Tensor clean = group_loss(g, z, lay, PosKind::clean, 0.5, false, 0.0,
                            WeightMode::uniform, t);
  Tensor adv = group_loss(g, z, lay, PosKind::adv, alpha, false, 0.0,
                          WeightMode::uniform, t);
  return combine(g, clean, adv, gamma, terms);
}

Tensor loss_hn(ag::Graph& g, Tensor z, std::size_t b, double alpha, double t,
               double tau, WeightMode wm, LossTerms* terms) {
  validate_z(z, b, t);
  check(alpha >= 0.0 && alpha <= 1.0, "loss_hn: alpha must be in [0,1], got ", alpha);
  check(tau >= 0.0 && tau < 1.0, "loss_hn: tau must be in [0,1), got ", tau);
  Layout lay{b};
  Tensor clean = group_loss(g, z, lay, PosKind::clean, 0.5, true, tau, wm, t);
  Tensor adv = group_loss(g, z, lay, PosKind::adv, alpha, true, tau, wm, t);
  return combine(g, clean, adv, 1.0, terms);
}

Tensor loss_ip_hn(ag::Graph& g, Tensor z, std::size_t b, double alpha, double gamma,
                  double t, double tau, WeightMode wm, LossTerms* terms) {
  validate_z(z, b, t);
  check(alpha >= 0.0 && alpha <= 1.0, "loss_ip_hn: alpha must be in [0,1], got ", alpha);
  check(gamma >= 0.0, "loss_ip_hn: gamma must be non-negative, got ", gamma);
  check(tau >= 0.0 && tau < 1.0, "loss_ip_hn: tau must be in [0,1), got ", tau);
  Layout lay{b};
  Tensor clean = group_loss(g, z, lay, PosKind::clean, 0.5, true, tau, wm, t);
  Tensor adv = group_loss(g, z, lay, PosKind::adv, alpha, true, tau, wm, t);
  return combine(g, clean, adv, gamma, terms);
}

Tensor build_loss(ag::Graph& g, Tensor z, std::size_t b, const LossConfig& cfg,
                  double alpha_now, LossTerms* terms) {
  cfg.validate();
  switch (cfg.kind) {
    case LossKind::infonce:
      return loss_infonce(g, z, b, cfg.temperature, terms);
    case LossKind::ip:
      return loss_ip(g, z, b, alpha_now, cfg.gamma, cfg.temperature, terms);
    case LossKind::hn:
      return loss_hn(g, z, b, alpha_now, cfg.temperature, cfg.tau, cfg.weight_mode,
                     terms);
    case LossKind::ip_hn:
      return loss_ip_hn(g, z, b, alpha_now, cfg.gamma, cfg.temperature, cfg.tau,
                        cfg.weight_mode, terms);
  }
  fail("build_loss: bad loss kind");
}

// ---------------------------------------------------------------------------
// Annealing

void AnnealConfig::validate() const {
  check(alpha_min >= 0.0 && alpha_min <= alpha_max && alpha_max <= 1.0,
        "anneal: need 0 <= alpha_min <= alpha_max <= 1, got [", alpha_min, ", ",
        alpha_max, "]");
  check(warmup_epochs >= 1, "anneal: warmup_epochs must be at least 1");
  check(d_min_ratio > 0.0 && d_min_ratio < 1.0,
        "anneal: d_min_ratio must be in (0,1), got ", d_min_ratio);
}

AnnealState::AnnealState(const AnnealConfig& cfg, double warm_alpha)
    : cfg_(cfg), warm_alpha_(warm_alpha), last_alpha_(warm_alpha) {
  cfg.validate();
  check(warm_alpha >= 0.0 && warm_alpha <= 1.0,
        "anneal: warm-up alpha must be in [0,1], got ", warm_alpha);
}

double AnnealState::map_alpha(double d, double alpha_min, double alpha_max,
                              double d_min, double d_max) {
  check(d_max > d_min, "anneal: d_max (", d_max, ") must exceed d_min (", d_min, ")");
  double a = alpha_min + (d_max - d) * (alpha_max - alpha_min) / (d_max - d_min);
  if (a < alpha_min) a = alpha_min;
  if (a > alpha_max) a = alpha_max;
  return a;
}

double AnnealState::observe(double d_batch) {
  check(std::isfinite(d_batch) && d_batch >= 0.0,
        "anneal: d_batch must be finite and non-negative, got ", d_batch);
  if (!warm_done_) {
    warm_sum_ += d_batch;
    ++warm_batches_;
    last_alpha_ = warm_alpha_;
    return warm_alpha_;
  }
  d_smooth_ = 0.9 * d_smooth_ + 0.1 * d_batch;
  last_alpha_ = map_alpha(d_smooth_, cfg_.alpha_min, cfg_.alpha_max, d_min_, d_max_);
  return last_alpha_;
}

void AnnealState::end_epoch() {
  ++epoch_;
  if (!warm_done_ && epoch_ >= cfg_.warmup_epochs) {
    check(warm_batches_ > 0, "anneal: warm-up finished without observing any batches");
    d_max_ = warm_sum_ / static_cast<double>(warm_batches_);
    d_min_ = cfg_.d_min_ratio * d_max_;
    check(d_max_ > d_min_, "anneal: d_max (", d_max_, ") <= d_min (", d_min_,
          ") after warm-up; embeddings are degenerate or the config is invalid");
    d_smooth_ = d_max_;
    warm_done_ = true;
  }
}

}  // namespace ainc::loss

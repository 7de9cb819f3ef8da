#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ainc/tensor.hpp"

namespace ainc::loss {

// Batch embedding layout for all batched losses: Z has 3B unit-norm rows,
//   rows [0,B)   first augmented view,
//   rows [B,2B)  second augmented view,
//   rows [2B,3B) adversarial view of the unaugmented source.
// Row r belongs to instance r % B. Anchors are the 2B clean rows; each anchor
// has M=2 positives (the other clean view and the adversarial view) and
// N = 3(B-1) negatives (every row of a different instance).
//
// The asymmetric similarity sim^alpha(a, b) has the plain dot product as its
// value and gradients alpha·b toward a and (1-alpha)·a toward b. Clean-clean
// pairs always use alpha = 0.5; the configured alpha applies to clean-adv
// pairs. Losses return SUMS over the 2B anchor pairs per group; the trainer
// normalizes.

enum class WeightMode { uniform, similarity };
enum class LossKind { infonce, ip, hn, ip_hn };

const char* weight_mode_name(WeightMode m);
const char* loss_kind_name(LossKind k);
WeightMode weight_mode_from_name(const std::string& s);
LossKind loss_kind_from_name(const std::string& s);

struct LossConfig {
  LossKind kind = LossKind::ip;
  double temperature = 0.5;
  double alpha = 0.3;   // clean-adv similarity asymmetry (fixed-alpha mode)
  double gamma = 1.0;   // adversarial group weight (ip / ip_hn)
  double tau = 0.1;     // positive-class prior for the debiased estimator
  WeightMode weight_mode = WeightMode::similarity;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Value-level helpers (no graph, no gradients)

// S = Z·Zᵀ for unit rows; rejects rows whose norm deviates from 1 by > 1e-6.
std::vector<double> pairwise_cosine(const std::vector<double>& z, std::size_t rows,
                                    std::size_t cols);

// uniform -> all ones; similarity -> exp(s / t) elementwise.
std::vector<double> pair_weights(const std::vector<double>& sims, WeightMode mode,
                                 double t);

// (M − (M+N)·tau) / (M·(1−tau)); may be negative (clamped estimator regime).
double lambda_pos_coeff(std::size_t m, std::size_t n, double tau);

// ---------------------------------------------------------------------------
// Per-pair graph ops (small-scale; used by tests and the batched builders'
// cross-checks)

// −log( λp·e^{sim05/t} / (λp·e^{sim05/t} + Σk λn_k·e^{sim_k/t}) ) with the
// alpha-asymmetric similarity on every pair. zi/zj rank 1; negs (N, K).
ag::Tensor a_infonce_pair(ag::Graph& g, ag::Tensor zi, ag::Tensor zj, ag::Tensor negs,
                          double t, double alpha, double lam_p,
                          const std::vector<double>& lam_n);

// Classical InfoNCE = a_infonce_pair at alpha 0.5, λp = 1, λn ≡ 1. The value
// is the textbook quantity; gradients carry the symmetric-split factor 1/2.
ag::Tensor infonce_pair(ag::Graph& g, ag::Tensor zi, ag::Tensor zj, ag::Tensor negs,
                        double t);

// Positive-unlabeled corrected negative mass with clamp floor N·e^{−1/t}:
//   max( (Σ wn·e^{s/t} − (N/M)·tau·Σ wp·e^{sp/t}) / (1−tau), N·e^{−1/t} ).
// neg_sims rank 1 (N), pos_sims rank 1 (M); weights are detached constants.
ag::Tensor debiased_negative_mass(ag::Graph& g, ag::Tensor neg_sims, ag::Tensor pos_sims,
                                  const std::vector<double>& w_n,
                                  const std::vector<double>& w_p, double tau, double t);

// ---------------------------------------------------------------------------
// Batched CoreACL losses over the 3B-row layout. `terms`, when given,
// receives the clean and adversarial group sums (adv pre-gamma).

struct LossTerms {
  ag::Tensor clean, adv;
};

ag::Tensor loss_infonce(ag::Graph& g, ag::Tensor z, std::size_t b, double t,
                        LossTerms* terms = nullptr);

// Clean pairs + gamma · clean→adv pairs, both plain (no debiasing).
ag::Tensor loss_ip(ag::Graph& g, ag::Tensor z, std::size_t b, double alpha,
                   double gamma, double t, LossTerms* terms = nullptr);

// Both groups with the debiased, weighted negative mass; gamma fixed at 1.
ag::Tensor loss_hn(ag::Graph& g, ag::Tensor z, std::size_t b, double alpha, double t,
                   double tau, WeightMode wm, LossTerms* terms = nullptr);

// Combined: debiased groups with the adversarial group scaled by gamma.
ag::Tensor loss_ip_hn(ag::Graph& g, ag::Tensor z, std::size_t b, double alpha,
                      double gamma, double t, double tau, WeightMode wm,
                      LossTerms* terms = nullptr);

// Dispatch on LossConfig; alpha_now overrides cfg.alpha (annealing).
ag::Tensor build_loss(ag::Graph& g, ag::Tensor z, std::size_t b, const LossConfig& cfg,
                      double alpha_now, LossTerms* terms = nullptr);

// ---------------------------------------------------------------------------
// Linear alpha annealing driven by the mean clean-adv embedding distance.
// During the first `warmup_epochs` epochs observe() returns the fixed
// configured alpha and accumulates the running mean distance that becomes
// d_max; afterwards it tracks an EMA d_smooth (momentum 0.9) and maps it
// linearly: alpha = amin + (d_max − d)·(amax − amin)/(d_max − d_min),
// clamped to [amin, amax].

struct AnnealConfig {
  bool enabled = false;
  double alpha_min = 0.2;
  double alpha_max = 0.5;
  int warmup_epochs = 5;
  double d_min_ratio = 0.25;  // d_min = ratio · d_max at warm-up end

  void validate() const;
};

class AnnealState {
 public:
  AnnealState(const AnnealConfig& cfg, double warm_alpha);

  double observe(double d_batch);  // per training batch
  void end_epoch();

  bool warm_done() const { return warm_done_; }
  double current_alpha() const { return last_alpha_; }
  double d_max() const { return d_max_; }
  double d_min() const { return d_min_; }
  double d_smooth() const { return d_smooth_; }

  static double map_alpha(double d, double alpha_min, double alpha_max,
                          double d_min, double d_max);

 private:
  AnnealConfig cfg_;
  double warm_alpha_;
  double last_alpha_;
  int epoch_ = 0;
  bool warm_done_ = false;
  double warm_sum_ = 0.0;
  long warm_batches_ = 0;
  double d_max_ = 0.0, d_min_ = 0.0, d_smooth_ = 0.0;
};

}  // namespace ainc::loss

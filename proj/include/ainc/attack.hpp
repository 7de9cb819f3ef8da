#pragma once

#include <functional>
#include <vector>

#include "ainc/encoder.hpp"
#include "ainc/losses.hpp"
#include "ainc/rng.hpp"

namespace ainc {

struct AttackConfig {
  double epsilon = 0.1;      // L∞ budget; 0 degenerates to the identity
  double step_size = 0.025;
  int steps = 5;
  bool random_start = true;
  double input_lo = 0.0, input_hi = 1.0;

  void validate() const;
};

// Builds the scalar objective to MAXIMIZE from the candidate input leaf.
using AdvLossFn = std::function<ag::Tensor(ag::Graph&, ag::Tensor x_adv)>;

// Called after each iteration with the current iterate (for tests).
using AttackObserver = std::function<void(int iter, const std::vector<double>&)>;

// Signed-gradient L∞ PGD ascent. The perturbation is projected back into the
// epsilon ball around x and clamped to [input_lo, input_hi] after the random
// start and after every iteration. epsilon == 0 returns a copy of x and
// consumes no RNG draws.
std::vector<double> pgd_attack(const std::vector<double>& x, std::size_t rows,
                               std::size_t cols, const AttackConfig& cfg, Rng& rng,
                               const AdvLossFn& build_loss,
                               const AttackObserver& observer = {});

// Maximizes the configured contrastive loss over the 3B-row layout. The two
// clean-view embeddings enter as constants and the encoder parameters are
// frozen, so only the adversarial rows receive gradient.
std::vector<double> pgd_contrastive(const Encoder& enc, const std::vector<double>& source,
                                    const std::vector<double>& z_clean, std::size_t b,
                                    const loss::LossConfig& loss_cfg, double alpha_now,
                                    const AttackConfig& cfg, Rng& rng,
                                    const AttackObserver& observer = {});

// Maximizes mean cross-entropy of classifier(encoder_features(x)) w.r.t. x;
// all model parameters frozen.
std::vector<double> pgd_supervised(const Encoder& enc, const LinearClassifier& clf,
                                   const std::vector<double>& x,
                                   const std::vector<std::size_t>& labels,
                                   const AttackConfig& cfg, Rng& rng,
                                   const AttackObserver& observer = {});

}  // namespace ainc

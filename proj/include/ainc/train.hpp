#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ainc/run_config.hpp"

namespace ainc {

struct MetricsRow {
  int epoch = 0;
  double loss_total = 0.0;  // per-anchor-pair means over the epoch
  double loss_clean = 0.0;
  double loss_adv = 0.0;
  double alpha = 0.0;   // mean weighting coefficient actually used
  double d_mean = 0.0;  // mean clean-to-adversarial embedding distance
};

// Thrown when a training loss goes non-finite; carries the parameters as of
// the end of the last completed epoch.
struct TrainAbort : Error {
  ParamStore last_good;
  int epoch;
  TrainAbort(const std::string& what, ParamStore params, int ep)
      : Error(what), last_good(std::move(params)), epoch(ep) {}
};

struct PretrainResult {
  Encoder encoder;
  std::vector<MetricsRow> log;  // one row per epoch
};

// Self-supervised adversarial pretraining of the encoder.
PretrainResult pretrain(const RunConfig& cfg, const Dataset& train, std::uint64_t seed);

struct FinetuneResult {
  Encoder encoder;
  LinearClassifier classifier;
  std::vector<std::pair<int, double>> log;  // (epoch, mean cross-entropy)
};

// Supervised finetuning per cfg.train.finetune_mode:
//   lp  - classifier only, clean inputs, encoder frozen
//   alf - classifier only, adversarial inputs (attack_eval), encoder frozen
//   aff - classifier and encoder, adversarial inputs
FinetuneResult finetune(const RunConfig& cfg, const Encoder& pretrained, const Dataset& train,
                        std::uint64_t seed);

struct EvalReport {
  double standard_accuracy = 0.0;
  double robust_accuracy = 0.0;
  std::vector<std::size_t> per_class_total;
  std::vector<std::size_t> per_class_clean_correct;
  std::vector<std::size_t> per_class_adv_correct;
};

// Accuracy on clean inputs and under the attack_eval PGD attack.
EvalReport evaluate(const RunConfig& cfg, const Encoder& enc, const LinearClassifier& clf,
                    const Dataset& test, std::uint64_t seed);

// Projection-head embeddings (rows x proj_dim) for every dataset row.
std::vector<double> embed_dataset(const Encoder& enc, const Dataset& ds);

// Mean pairwise Euclidean distance over all distinct row pairs; small values
// indicate the embedding has collapsed. rows must be >= 2.
double collapse_metric(const std::vector<double>& z, std::size_t rows, std::size_t cols);

// Mean distance between each of the 2B clean-view embeddings and the
// adversarial embedding of the same instance, given the 3B-row layout.
double mean_clean_adv_distance(const std::vector<double>& z, std::size_t b, std::size_t cols);

}  // namespace ainc

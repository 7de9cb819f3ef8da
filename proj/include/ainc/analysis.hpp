#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ainc/train.hpp"

namespace ainc {

struct SweepRow {
  double alpha = 0.0;
  double standard_accuracy = 0.0;
  double robust_accuracy = 0.0;
  double collapse = 0.0;  // mean pairwise test-embedding distance
};

// For each alpha: pretrain with that fixed asymmetry (annealing off), linear
// probe, evaluate, and measure the test-embedding collapse metric. Rows come
// back sorted by alpha. A single-alpha sweep reproduces the standalone
// pretrain/finetune/evaluate pipeline exactly (same seed derivations).
std::vector<SweepRow> alpha_sweep(const RunConfig& cfg, const Dataset& train,
                                  const Dataset& test, std::vector<double> alphas,
                                  std::uint64_t seed);

struct HistRow {
  double lo = 0.0, hi = 0.0;  // bin edges over [0, 2]
  double frequency = 0.0;     // fraction of pairs; sums to 1
};

// Histogram of pairwise distances between unit embeddings (range [0, 2]).
std::vector<HistRow> distance_histogram(const std::vector<double>& z, std::size_t rows,
                                        std::size_t cols, std::size_t bins);

// CSV writers. Every file starts with "# config_hash=<hex> seed=<seed>" and a
// header row; numbers are printed with 17 significant digits.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const std::string& config_hash, std::uint64_t seed);
void write_finetune_csv(const std::string& path,
                        const std::vector<std::pair<int, double>>& rows,
                        const std::string& config_hash, std::uint64_t seed);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& config_hash, std::uint64_t seed);
void write_hist_csv(const std::string& path, const std::vector<HistRow>& rows,
                    const std::string& config_hash, std::uint64_t seed);

// Finite-difference validation of every differentiable building block, the
// encoder, each loss variant, and an attack-style input gradient. Prints one
// line per suite to `out`; returns true when every check passes.
bool run_gradient_suites(std::ostream& out);

}  // namespace ainc

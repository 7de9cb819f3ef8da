#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ainc/attack.hpp"
#include "ainc/data.hpp"
#include "ainc/encoder.hpp"
#include "ainc/losses.hpp"

namespace ainc {

struct DatasetConfig {
  std::string kind = "blobs";  // "blobs" or "csv"
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t n_train_per_class = 200;
  std::size_t n_test_per_class = 50;
  double spread = 0.08;
  std::uint64_t seed = 1234;
  std::string train_csv, test_csv;  // csv kind only

  void validate() const;
};

// Materializes (train, test). Blob generation uses the dataset's own seed so
// the data is independent of the run seed.
std::pair<Dataset, Dataset> load_dataset(const DatasetConfig& cfg);

enum class FinetuneMode { lp, alf, aff };
FinetuneMode finetune_mode_from_string(const std::string& s);
std::string to_string(FinetuneMode m);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double lr = 0.1;
  double momentum = 0.9;
  int finetune_epochs = 50;
  double finetune_lr = 0.01;
  FinetuneMode finetune_mode = FinetuneMode::lp;

  void validate() const;
};

struct RunConfig {
  DatasetConfig dataset;
  MlpConfig encoder;  // input_dim is overwritten from the dataset at use time
  loss::LossConfig loss;
  loss::AnnealConfig anneal;
  AugmentPolicy augment;
  AttackConfig attack_pretrain{0.1, 0.025, 5, true, 0.0, 1.0};
  AttackConfig attack_eval{0.1, 0.01, 20, true, 0.0, 1.0};
  TrainConfig train;

  void validate() const;
};

// JSON I/O. Unknown keys anywhere are an error; missing keys fall back to the
// defaults above, and each fallback appends one human-readable line to
// `notices` when given.
RunConfig config_from_json_string(const std::string& text, std::vector<std::string>* notices);
RunConfig load_config_file(const std::string& path, std::vector<std::string>* notices);
std::string config_to_json_string(const RunConfig& cfg);

// FNV-1a 64 over the canonical JSON form, as 16 lowercase hex digits.
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace ainc

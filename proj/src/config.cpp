#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ainc/common.hpp"
#include "ainc/run_config.hpp"
#include "json.hpp"

namespace ainc {

using njson = nlohmann::json;

// ---------------------------------------------------------------- validate

void DatasetConfig::validate() const {
  check(kind == "blobs" || kind == "csv", "config: dataset.kind must be \"blobs\" or \"csv\", got \"",
        kind, "\"");
  if (kind == "blobs") {
    check(classes >= 2, "config: dataset.classes must be >= 2, got ", classes);
    check(dim >= 1, "config: dataset.dim must be >= 1, got ", dim);
    check(n_train_per_class >= 1, "config: dataset.n_train_per_class must be >= 1");
    check(n_test_per_class >= 1, "config: dataset.n_test_per_class must be >= 1");
    check(std::isfinite(spread) && spread > 0.0, "config: dataset.spread must be > 0, got ",
          spread);
  } else {
    check(!train_csv.empty(), "config: dataset.train_csv is required when kind is \"csv\"");
    check(!test_csv.empty(), "config: dataset.test_csv is required when kind is \"csv\"");
  }
}

std::pair<Dataset, Dataset> load_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "blobs") {
    Dataset train = gen_blobs(cfg.classes, cfg.dim, cfg.n_train_per_class, cfg.spread,
                              mix_seed(cfg.seed, seed_tag::data_train));
    Dataset test = gen_blobs(cfg.classes, cfg.dim, cfg.n_test_per_class, cfg.spread,
                             mix_seed(cfg.seed, seed_tag::data_test));
    return {std::move(train), std::move(test)};
  }
  Dataset train = load_csv(cfg.train_csv);
  Dataset test = load_csv(cfg.test_csv);
  check(train.dim == test.dim, "config: train csv dim ", train.dim, " != test csv dim ",
        test.dim);
  return {std::move(train), std::move(test)};
}

FinetuneMode finetune_mode_from_string(const std::string& s) {
  if (s == "lp") return FinetuneMode::lp;
  if (s == "alf") return FinetuneMode::alf;
  if (s == "aff") return FinetuneMode::aff;
  fail("config: unknown finetune mode \"", s, "\" (expected lp, alf, or aff)");
}

std::string to_string(FinetuneMode m) {
  switch (m) {
    case FinetuneMode::lp: return "lp";
    case FinetuneMode::alf: return "alf";
    case FinetuneMode::aff: return "aff";
  }
  fail("config: invalid finetune mode value");
}

void TrainConfig::validate() const {
  check(epochs >= 1, "config: train.epochs must be >= 1, got ", epochs);
  check(batch_size >= 2, "config: train.batch_size must be >= 2, got ", batch_size);
  check(std::isfinite(lr) && lr > 0.0, "config: train.lr must be > 0, got ", lr);
  check(std::isfinite(momentum) && momentum >= 0.0 && momentum < 1.0,
        "config: train.momentum must be in [0, 1), got ", momentum);
  check(finetune_epochs >= 1, "config: train.finetune_epochs must be >= 1, got ",
        finetune_epochs);
  check(std::isfinite(finetune_lr) && finetune_lr > 0.0,
        "config: train.finetune_lr must be > 0, got ", finetune_lr);
}

void RunConfig::validate() const {
  dataset.validate();
  encoder.validate();
  loss.validate();
  anneal.validate();
  augment.validate();
  attack_pretrain.validate();
  attack_eval.validate();
  train.validate();
  check(augment.input_lo == attack_pretrain.input_lo &&
            augment.input_hi == attack_pretrain.input_hi &&
            augment.input_lo == attack_eval.input_lo && augment.input_hi == attack_eval.input_hi,
        "config: augment and attack input ranges must agree");
}

// ---------------------------------------------------------------- parsing

namespace {

// One JSON object level: typed reads, default-fallback notices, and a final
// unknown-key sweep.
class Section {
 public:
  Section(const njson& j, std::string path, std::vector<std::string>* notices)
      : j_(j), path_(std::move(path)), notices_(notices) {
    check(j_.is_object(), "config: ", path_, " must be a JSON object");
  }

  const njson* sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (notices_)
        notices_->push_back(msg("config: section '", key, "' not set; using defaults"));
      return nullptr;
    }
    return &j_.at(key);
  }

  void f64(const char* key, double& out) {
    if (const njson* v = claim(key, out)) {
      check(v->is_number(), "config: ", path_, ".", key, " must be a number");
      out = v->get<double>();
    }
  }
  void int32(const char* key, int& out) {
    if (const njson* v = claim(key, out)) {
      check(v->is_number_integer(), "config: ", path_, ".", key, " must be an integer");
      std::int64_t raw = v->get<std::int64_t>();
      check(raw >= INT32_MIN && raw <= INT32_MAX, "config: ", path_, ".", key, " out of range");
      out = static_cast<int>(raw);
    }
  }
  void uint(const char* key, std::size_t& out) {
    if (const njson* v = claim(key, out)) {
      check(v->is_number_integer() && v->get<std::int64_t>() >= 0, "config: ", path_, ".", key,
            " must be a non-negative integer");
      out = static_cast<std::size_t>(v->get<std::uint64_t>());
    }
  }
  void u64(const char* key, std::uint64_t& out) {
    if (const njson* v = claim(key, out)) {
      check(v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0),
            "config: ", path_, ".", key, " must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (const njson* v = claim(key, out)) {
      check(v->is_boolean(), "config: ", path_, ".", key, " must be true or false");
      out = v->get<bool>();
    }
  }
  void str(const char* key, std::string& out) {
    if (const njson* v = claim(key, out)) {
      check(v->is_string(), "config: ", path_, ".", key, " must be a string");
      out = v->get<std::string>();
    }
  }
  void uint_list(const char* key, std::vector<std::size_t>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      std::ostringstream os;
      os << "[";
      for (std::size_t i = 0; i < out.size(); ++i) os << (i ? ", " : "") << out[i];
      os << "]";
      note_default(key, os.str());
      return;
    }
    const njson& v = j_.at(key);
    check(v.is_array() && !v.empty(), "config: ", path_, ".", key,
          " must be a non-empty array of positive integers");
    std::vector<std::size_t> vals;
    for (const njson& e : v) {
      check(e.is_number_integer() && e.get<std::int64_t>() > 0, "config: ", path_, ".", key,
            " must contain positive integers only");
      vals.push_back(static_cast<std::size_t>(e.get<std::uint64_t>()));
    }
    out = std::move(vals);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      check(seen_.count(it.key()) > 0, "config: unknown key '", path_, ".", it.key(), "'");
  }

 private:
  template <class T>
  const njson* claim(const char* key, const T& current) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      note_default(key, msg(current));
      return nullptr;
    }
    return &j_.at(key);
  }
  void note_default(const char* key, const std::string& shown) {
    if (notices_)
      notices_->push_back(msg("config: ", path_, ".", key, " not set; using default ", shown));
  }

  const njson& j_;
  std::string path_;
  std::vector<std::string>* notices_;
  std::set<std::string> seen_;
};

void parse_attack(const njson* j, const char* name, AttackConfig& out,
                  std::vector<std::string>* notices) {
  if (!j) return;
  Section s(*j, name, notices);
  s.f64("epsilon", out.epsilon);
  s.f64("step_size", out.step_size);
  s.int32("steps", out.steps);
  s.boolean("random_start", out.random_start);
  s.f64("input_lo", out.input_lo);
  s.f64("input_hi", out.input_hi);
  s.finish();
}

}  // namespace

RunConfig config_from_json_string(const std::string& text, std::vector<std::string>* notices) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const std::exception& e) {
    fail("config: invalid JSON: ", e.what());
  }

  RunConfig cfg;
  Section top(j, "<top>", notices);

  if (const njson* jd = top.sub("dataset")) {
    Section s(*jd, "dataset", notices);
    s.str("kind", cfg.dataset.kind);
    s.uint("classes", cfg.dataset.classes);
    s.uint("dim", cfg.dataset.dim);
    s.uint("n_train_per_class", cfg.dataset.n_train_per_class);
    s.uint("n_test_per_class", cfg.dataset.n_test_per_class);
    s.f64("spread", cfg.dataset.spread);
    s.u64("seed", cfg.dataset.seed);
    s.str("train_csv", cfg.dataset.train_csv);
    s.str("test_csv", cfg.dataset.test_csv);
    s.finish();
  }
  if (const njson* je = top.sub("encoder")) {
    Section s(*je, "encoder", notices);
    s.uint_list("hidden", cfg.encoder.hidden);
    s.uint("proj_dim", cfg.encoder.proj_dim);
    s.finish();
  }
  if (const njson* jl = top.sub("loss")) {
    Section s(*jl, "loss", notices);
    std::string kind = loss::loss_kind_name(cfg.loss.kind);
    std::string wm = loss::weight_mode_name(cfg.loss.weight_mode);
    s.str("kind", kind);
    s.f64("temperature", cfg.loss.temperature);
    s.f64("alpha", cfg.loss.alpha);
    s.f64("gamma", cfg.loss.gamma);
    s.f64("tau", cfg.loss.tau);
    s.str("weight_mode", wm);
    s.finish();
    cfg.loss.kind = loss::loss_kind_from_name(kind);
    cfg.loss.weight_mode = loss::weight_mode_from_name(wm);
  }
  if (const njson* ja = top.sub("anneal")) {
    Section s(*ja, "anneal", notices);
    s.boolean("enabled", cfg.anneal.enabled);
    s.f64("alpha_min", cfg.anneal.alpha_min);
    s.f64("alpha_max", cfg.anneal.alpha_max);
    s.int32("warmup_epochs", cfg.anneal.warmup_epochs);
    s.f64("d_min_ratio", cfg.anneal.d_min_ratio);
    s.finish();
  }
  if (const njson* jg = top.sub("augment")) {
    Section s(*jg, "augment", notices);
    s.f64("noise_sigma", cfg.augment.noise_sigma);
    s.f64("mask_prob", cfg.augment.mask_prob);
    s.f64("brightness_lo", cfg.augment.brightness_lo);
    s.f64("brightness_hi", cfg.augment.brightness_hi);
    s.finish();
  }
  parse_attack(top.sub("attack_pretrain"), "attack_pretrain", cfg.attack_pretrain, notices);
  parse_attack(top.sub("attack_eval"), "attack_eval", cfg.attack_eval, notices);
  if (const njson* jt = top.sub("train")) {
    Section s(*jt, "train", notices);
    s.int32("epochs", cfg.train.epochs);
    s.int32("batch_size", cfg.train.batch_size);
    s.f64("lr", cfg.train.lr);
    s.f64("momentum", cfg.train.momentum);
    s.int32("finetune_epochs", cfg.train.finetune_epochs);
    s.f64("finetune_lr", cfg.train.finetune_lr);
    std::string mode = to_string(cfg.train.finetune_mode);
    s.str("finetune_mode", mode);
    s.finish();
    cfg.train.finetune_mode = finetune_mode_from_string(mode);
  }
  top.finish();

  cfg.validate();
  return cfg;
}

RunConfig load_config_file(const std::string& path, std::vector<std::string>* notices) {
  std::ifstream in(path);
  check(in.good(), "config: cannot open '", path, "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_string(ss.str(), notices);
}

namespace {

njson config_to_json(const RunConfig& cfg) {
  njson j;
  j["dataset"] = {{"kind", cfg.dataset.kind},
                  {"classes", cfg.dataset.classes},
                  {"dim", cfg.dataset.dim},
                  {"n_train_per_class", cfg.dataset.n_train_per_class},
                  {"n_test_per_class", cfg.dataset.n_test_per_class},
                  {"spread", cfg.dataset.spread},
                  {"seed", cfg.dataset.seed},
                  {"train_csv", cfg.dataset.train_csv},
                  {"test_csv", cfg.dataset.test_csv}};
  j["encoder"] = {{"hidden", cfg.encoder.hidden}, {"proj_dim", cfg.encoder.proj_dim}};
  j["loss"] = {{"kind", loss::loss_kind_name(cfg.loss.kind)},
               {"temperature", cfg.loss.temperature},
               {"alpha", cfg.loss.alpha},
               {"gamma", cfg.loss.gamma},
               {"tau", cfg.loss.tau},
               {"weight_mode", loss::weight_mode_name(cfg.loss.weight_mode)}};
  j["anneal"] = {{"enabled", cfg.anneal.enabled},
                 {"alpha_min", cfg.anneal.alpha_min},
                 {"alpha_max", cfg.anneal.alpha_max},
                 {"warmup_epochs", cfg.anneal.warmup_epochs},
                 {"d_min_ratio", cfg.anneal.d_min_ratio}};
  j["augment"] = {{"noise_sigma", cfg.augment.noise_sigma},
                  {"mask_prob", cfg.augment.mask_prob},
                  {"brightness_lo", cfg.augment.brightness_lo},
                  {"brightness_hi", cfg.augment.brightness_hi}};
  auto attack = [](const AttackConfig& a) {
    return njson{{"epsilon", a.epsilon},  {"step_size", a.step_size},
                 {"steps", a.steps},      {"random_start", a.random_start},
                 {"input_lo", a.input_lo}, {"input_hi", a.input_hi}};
  };
  j["attack_pretrain"] = attack(cfg.attack_pretrain);
  j["attack_eval"] = attack(cfg.attack_eval);
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"lr", cfg.train.lr},
                {"momentum", cfg.train.momentum},
                {"finetune_epochs", cfg.train.finetune_epochs},
                {"finetune_lr", cfg.train.finetune_lr},
                {"finetune_mode", to_string(cfg.train.finetune_mode)}};
  return j;
}

}  // namespace

std::string config_to_json_string(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::string config_hash_hex(const RunConfig& cfg) {
  std::string canon = config_to_json(cfg).dump();  // compact, keys sorted
  std::uint64_t h = 14695981039346656037ull;       // FNV-1a 64
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ainc

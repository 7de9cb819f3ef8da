#include "ainc/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ainc/analysis.hpp"
#include "ainc/checkpoint.hpp"
#include "ainc/common.hpp"
#include "ainc/train.hpp"

namespace ainc {

namespace {

RunConfig load_config_logged(const std::string& path) {
  std::vector<std::string> notices;
  RunConfig cfg = load_config_file(path, &notices);
  for (const std::string& n : notices) log::info(n);
  log::info("config hash ", config_hash_hex(cfg));
  return cfg;
}

// A finetuned checkpoint holds encoder and classifier parameters side by
// side; a pretrain checkpoint holds only the encoder.
void split_store(const ParamStore& all, ParamStore& enc, ParamStore& clf) {
  for (const auto& p : all.params) {
    if (p.name.rfind("classifier.", 0) == 0)
      clf.add(p.name, p.shape, p.vals);
    else
      enc.add(p.name, p.shape, p.vals);
  }
}

Encoder load_encoder(const std::string& path) {
  ParamStore all = load_checkpoint(path);
  ParamStore enc, clf;
  split_store(all, enc, clf);
  return Encoder::from_params(enc);
}

std::vector<double> parse_alpha_list(const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  check(!s.empty(), "sweep: --alphas list is empty");
  while (true) {
    std::size_t pos = s.find(',', start);
    std::string tok = s.substr(start, pos == std::string::npos ? pos : pos - start);
    const char* c = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(c, &end);
    check(*c != '\0' && end != c && *end == '\0', "sweep: cannot parse alpha '", tok, "'");
    out.push_back(v);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

int cmd_pretrain(const std::string& config_path, std::uint64_t seed, const std::string& out_path,
                 const std::string& metrics_path) {
  RunConfig cfg = load_config_logged(config_path);
  auto [train_set, test_set] = load_dataset(cfg.dataset);
  (void)test_set;
  log::info("pretrain: ", train_set.size(), " rows, ", cfg.train.epochs, " epochs, loss ",
            loss::loss_kind_name(cfg.loss.kind));
  PretrainResult res;
  try {
    res = pretrain(cfg, train_set, seed);
  } catch (const TrainAbort& abort) {
    save_checkpoint(out_path, abort.last_good);
    log::warn("pretrain aborted: ", abort.what());
    log::warn("wrote last good parameters (epoch ", abort.epoch - 1, ") to ", out_path);
    throw;
  }
  save_checkpoint(out_path, res.encoder.params());
  if (!metrics_path.empty())
    write_metrics_csv(metrics_path, res.log, config_hash_hex(cfg), seed);
  const MetricsRow& last = res.log.back();
  std::printf("pretrain done: epochs=%d loss=%s d_mean=%s checkpoint=%s\n", cfg.train.epochs,
              fmt17(last.loss_total).c_str(), fmt17(last.d_mean).c_str(), out_path.c_str());
  return 0;
}

int cmd_finetune(const std::string& config_path, std::uint64_t seed,
                 const std::string& encoder_path, const std::string& out_path,
                 const std::string& mode_override, const std::string& metrics_path) {
  RunConfig cfg = load_config_logged(config_path);
  if (!mode_override.empty()) cfg.train.finetune_mode = finetune_mode_from_string(mode_override);
  auto [train_set, test_set] = load_dataset(cfg.dataset);
  (void)test_set;
  Encoder enc = load_encoder(encoder_path);
  log::info("finetune: mode ", to_string(cfg.train.finetune_mode), ", ",
            cfg.train.finetune_epochs, " epochs");
  FinetuneResult res;
  try {
    res = finetune(cfg, enc, train_set, seed);
  } catch (const TrainAbort& abort) {
    save_checkpoint(out_path, abort.last_good);
    log::warn("finetune aborted: ", abort.what());
    log::warn("wrote last good parameters (epoch ", abort.epoch - 1, ") to ", out_path);
    throw;
  }
  save_checkpoint(out_path, merge_stores(res.encoder.params(), res.classifier.params()));
  if (!metrics_path.empty())
    write_finetune_csv(metrics_path, res.log, config_hash_hex(cfg), seed);
  std::printf("finetune done: mode=%s epochs=%d loss=%s checkpoint=%s\n",
              to_string(cfg.train.finetune_mode).c_str(), cfg.train.finetune_epochs,
              fmt17(res.log.back().second).c_str(), out_path.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, std::uint64_t seed, const std::string& ckpt_path,
             const std::string& json_path) {
  RunConfig cfg = load_config_logged(config_path);
  auto [train_set, test_set] = load_dataset(cfg.dataset);
  (void)train_set;
  ParamStore all = load_checkpoint(ckpt_path);
  ParamStore enc_store, clf_store;
  split_store(all, enc_store, clf_store);
  check(!clf_store.params.empty(), "eval: checkpoint '", ckpt_path,
        "' contains no classifier parameters; run finetune first");
  Encoder enc = Encoder::from_params(enc_store);
  LinearClassifier clf = LinearClassifier::from_params(clf_store);

  EvalReport rep = evaluate(cfg, enc, clf, test_set, seed);
  std::printf("standard_accuracy=%s\n", fmt17(rep.standard_accuracy).c_str());
  std::printf("robust_accuracy=%s\n", fmt17(rep.robust_accuracy).c_str());
  for (std::size_t c = 0; c < rep.per_class_total.size(); ++c)
    std::printf("class %zu: total=%zu clean_correct=%zu adv_correct=%zu\n", c,
                rep.per_class_total[c], rep.per_class_clean_correct[c],
                rep.per_class_adv_correct[c]);

  if (!json_path.empty()) {
    nlohmann::json j;
    j["standard_accuracy"] = rep.standard_accuracy;
    j["robust_accuracy"] = rep.robust_accuracy;
    j["config_hash"] = config_hash_hex(cfg);
    j["seed"] = seed;
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t c = 0; c < rep.per_class_total.size(); ++c)
      per.push_back({{"class", c},
                     {"total", rep.per_class_total[c]},
                     {"clean_correct", rep.per_class_clean_correct[c]},
                     {"adv_correct", rep.per_class_adv_correct[c]}});
    j["per_class"] = per;
    std::ofstream out(json_path);
    check(out.good(), "eval: cannot open '", json_path, "' for writing");
    out << j.dump(2) << "\n";
    out.flush();
    check(out.good(), "eval: write to '", json_path, "' failed");
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, std::uint64_t seed, const std::string& alphas_str,
              const std::string& out_path) {
  RunConfig cfg = load_config_logged(config_path);
  auto [train_set, test_set] = load_dataset(cfg.dataset);
  std::vector<double> alphas = parse_alpha_list(alphas_str);
  std::vector<SweepRow> rows = alpha_sweep(cfg, train_set, test_set, alphas, seed);
  write_sweep_csv(out_path, rows, config_hash_hex(cfg), seed);
  for (const SweepRow& r : rows)
    std::printf("alpha=%s standard=%s robust=%s collapse=%s\n", fmt17(r.alpha).c_str(),
                fmt17(r.standard_accuracy).c_str(), fmt17(r.robust_accuracy).c_str(),
                fmt17(r.collapse).c_str());
  return 0;
}

int cmd_dist_hist(const std::string& config_path, std::uint64_t seed,
                  const std::string& ckpt_path, std::size_t bins, const std::string& out_path) {
  RunConfig cfg = load_config_logged(config_path);
  auto [train_set, test_set] = load_dataset(cfg.dataset);
  (void)train_set;
  Encoder enc = load_encoder(ckpt_path);
  std::vector<double> z = embed_dataset(enc, test_set);
  std::vector<HistRow> rows =
      distance_histogram(z, test_set.size(), enc.config().proj_dim, bins);
  write_hist_csv(out_path, rows, config_hash_hex(cfg), seed);
  std::printf("dist-hist done: rows=%zu bins=%zu mean_pairwise=%s out=%s\n", test_set.size(),
              bins, fmt17(collapse_metric(z, test_set.size(), enc.config().proj_dim)).c_str(),
              out_path.c_str());
  return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& train_path,
                 const std::string& test_path) {
  RunConfig cfg = load_config_logged(config_path);
  auto [train_set, test_set] = load_dataset(cfg.dataset);
  save_csv(train_path, train_set);
  save_csv(test_path, test_set);
  std::printf("gen-data done: train=%s (%zu rows) test=%s (%zu rows)\n", train_path.c_str(),
              train_set.size(), test_path.c_str(), test_set.size());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"desk-scale lab for asymmetric adversarial contrastive learning"};
  app.require_subcommand(1);

  std::string config_path, out_path, metrics_path, encoder_path, ckpt_path, json_path;
  std::string alphas_str, mode_override, train_path, test_path;
  std::uint64_t seed = 0;
  std::size_t bins = 40;

  CLI::App* sp = app.add_subcommand("pretrain", "adversarial contrastive pretraining");
  sp->add_option("--config", config_path, "JSON config file")->required();
  sp->add_option("--seed", seed, "run seed");
  sp->add_option("--out", out_path, "output checkpoint")->required();
  sp->add_option("--metrics", metrics_path, "per-epoch metrics CSV");

  CLI::App* sf = app.add_subcommand("finetune", "supervised finetuning of a pretrained encoder");
  sf->add_option("--config", config_path, "JSON config file")->required();
  sf->add_option("--seed", seed, "run seed");
  sf->add_option("--encoder", encoder_path, "pretrained encoder checkpoint")->required();
  sf->add_option("--out", out_path, "output checkpoint (encoder + classifier)")->required();
  sf->add_option("--mode", mode_override, "override finetune mode: lp, alf, or aff");
  sf->add_option("--metrics", metrics_path, "per-epoch loss CSV");

  CLI::App* se = app.add_subcommand("eval", "standard and robust accuracy on the test split");
  se->add_option("--config", config_path, "JSON config file")->required();
  se->add_option("--seed", seed, "run seed");
  se->add_option("--checkpoint", ckpt_path, "finetuned checkpoint")->required();
  se->add_option("--json", json_path, "write the report as JSON");

  CLI::App* sw = app.add_subcommand("sweep-alpha", "pretrain+probe+eval across asymmetry values");
  sw->add_option("--config", config_path, "JSON config file")->required();
  sw->add_option("--seed", seed, "run seed");
  sw->add_option("--alphas", alphas_str, "comma-separated alphas in [0,1]")->required();
  sw->add_option("--out", out_path, "output CSV")->required();

  CLI::App* sh = app.add_subcommand("dist-hist", "pairwise test-embedding distance histogram");
  sh->add_option("--config", config_path, "JSON config file")->required();
  sh->add_option("--seed", seed, "recorded in the CSV header (histogram is deterministic)");
  sh->add_option("--checkpoint", ckpt_path, "encoder checkpoint")->required();
  sh->add_option("--bins", bins, "bin count over [0,2]");
  sh->add_option("--out", out_path, "output CSV")->required();

  CLI::App* sg = app.add_subcommand("gradcheck", "finite-difference gradient validation");
  (void)sg;

  CLI::App* sd = app.add_subcommand("gen-data", "write the configured dataset as CSV");
  sd->add_option("--config", config_path, "JSON config file")->required();
  sd->add_option("--out-train", train_path, "training CSV path")->required();
  sd->add_option("--out-test", test_path, "test CSV path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("ainc");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help is a success; anything else is usage
  }

  try {
    if (sp->parsed()) return cmd_pretrain(config_path, seed, out_path, metrics_path);
    if (sf->parsed())
      return cmd_finetune(config_path, seed, encoder_path, out_path, mode_override, metrics_path);
    if (se->parsed()) return cmd_eval(config_path, seed, ckpt_path, json_path);
    if (sw->parsed()) return cmd_sweep(config_path, seed, alphas_str, out_path);
    if (sh->parsed()) return cmd_dist_hist(config_path, seed, ckpt_path, bins, out_path);
    if (sg->parsed()) {
      bool ok = run_gradient_suites(std::cout);
      std::printf("gradcheck %s\n", ok ? "passed" : "FAILED");
      return ok ? 0 : 2;
    }
    if (sd->parsed()) return cmd_gen_data(config_path, train_path, test_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "[error] %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "[error] unexpected: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace ainc

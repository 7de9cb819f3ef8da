#include "ainc/train.hpp"

#include <algorithm>
#include <cmath>

#include "ainc/common.hpp"

namespace ainc {

namespace {

double row_distance(const double* a, const double* b, std::size_t cols) {
  double acc = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    double d = a[c] - b[c];
    acc += d * d;
  }
  return std::sqrt(acc);
}

std::vector<std::vector<double>> collect_grads(const ag::Graph& g, std::size_t param_count,
                                               const std::vector<std::pair<std::size_t, int>>& leaf_of_param) {
  std::vector<std::vector<double>> grads(param_count);
  for (const auto& [pi, leaf] : leaf_of_param) grads[pi] = g.grad(leaf);
  return grads;
}

}  // namespace

double collapse_metric(const std::vector<double>& z, std::size_t rows, std::size_t cols) {
  check(rows >= 2, "collapse metric needs at least 2 rows, got ", rows);
  check(cols >= 1 && z.size() == rows * cols, "collapse metric: buffer has ", z.size(),
        " values, expected ", rows, "x", cols);
  double sum = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = i + 1; j < rows; ++j)
      sum += row_distance(z.data() + i * cols, z.data() + j * cols, cols);
  return sum / (0.5 * static_cast<double>(rows) * static_cast<double>(rows - 1));
}

double mean_clean_adv_distance(const std::vector<double>& z, std::size_t b, std::size_t cols) {
  check(b >= 1 && z.size() == 3 * b * cols, "clean-adv distance: buffer has ", z.size(),
        " values, expected ", 3 * b, "x", cols);
  double sum = 0.0;
  for (std::size_t a = 0; a < 2 * b; ++a) {
    std::size_t adv = 2 * b + (a % b);
    sum += row_distance(z.data() + a * cols, z.data() + adv * cols, cols);
  }
  return sum / static_cast<double>(2 * b);
}

std::vector<double> embed_dataset(const Encoder& enc, const Dataset& ds) {
  ds.validate();
  check(ds.dim == enc.config().input_dim, "embed: dataset dim ", ds.dim,
        " does not match encoder input dim ", enc.config().input_dim);
  std::vector<double> z;
  enc.embed(ds.x, ds.size(), nullptr, &z);
  return z;
}

// ---------------------------------------------------------------- pretrain

PretrainResult pretrain(const RunConfig& cfg, const Dataset& train, std::uint64_t seed) {
  cfg.validate();
  train.validate();
  const std::size_t n = train.size();
  check(n >= 2, "pretrain: need at least 2 training rows, got ", n);

  MlpConfig mcfg = cfg.encoder;
  mcfg.input_dim = train.dim;
  mcfg.validate();
  const std::size_t k = mcfg.proj_dim;

  Encoder enc = Encoder::init(mcfg, mix_seed(seed, seed_tag::init));
  SgdState sgd(enc.params());
  loss::AnnealState anneal(cfg.anneal, cfg.loss.alpha);
  const bool annealing = cfg.anneal.enabled;
  const bool is_infonce = cfg.loss.kind == loss::LossKind::infonce;

  ParamStore last_good = enc.params();
  PretrainResult out;
  out.log.reserve(static_cast<std::size_t>(cfg.train.epochs));

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::vector<std::size_t> order = epoch_order(n, seed, static_cast<std::uint64_t>(epoch));
    Rng aug_rng(mix_seed(seed, seed_tag::augment, static_cast<std::uint64_t>(epoch)));
    Rng atk_rng(mix_seed(seed, seed_tag::attack, static_cast<std::uint64_t>(epoch)));

    double sum_total = 0.0, sum_clean = 0.0, sum_adv = 0.0, sum_alpha = 0.0, sum_d = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start + 2 <= n; start += cfg.train.batch_size) {
      const std::size_t b = std::min<std::size_t>(cfg.train.batch_size, n - start);
      if (b < 2) break;  // a 1-row tail has no positive pair
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + b);
      ContrastiveBatch batch = make_batch(train, idx, cfg.augment, aug_rng);

      // Clean-view embeddings (values only) feed the attack as constants.
      std::vector<double> v12(2 * b * train.dim);
      std::copy(batch.view1.begin(), batch.view1.end(), v12.begin());
      std::copy(batch.view2.begin(), batch.view2.end(), v12.begin() + b * train.dim);
      std::vector<double> z_clean;
      enc.embed(v12, 2 * b, nullptr, &z_clean);

      double atk_alpha = annealing ? anneal.current_alpha() : cfg.loss.alpha;
      std::vector<double> adv = pgd_contrastive(enc, batch.source, z_clean, b, cfg.loss,
                                                atk_alpha, cfg.attack_pretrain, atk_rng);

      ag::Graph g;
      Encoder::Bound bound = enc.bind(g, /*frozen=*/false);
      std::vector<double> xin(3 * b * train.dim);
      std::copy(v12.begin(), v12.end(), xin.begin());
      std::copy(adv.begin(), adv.end(), xin.begin() + 2 * b * train.dim);
      ag::Tensor x = g.constant(ag::Shape::mat(3 * b, train.dim), xin);
      Encoder::Encoded e = enc.encode(g, bound, x);

      double d_batch = mean_clean_adv_distance(e.z.vals(), b, k);
      double alpha_now = annealing ? anneal.observe(d_batch) : cfg.loss.alpha;

      loss::LossTerms terms;
      ag::Tensor total = loss::build_loss(g, e.z, b, cfg.loss, alpha_now, &terms);
      const double norm = 1.0 / (2.0 * static_cast<double>(b));
      double lv = total.scalar_val() * norm;
      if (!std::isfinite(lv))
        throw TrainAbort(msg("pretrain: loss went non-finite at epoch ", epoch, ", batch ",
                             batches, "; keeping parameters from epoch ", epoch - 1),
                         last_good, epoch);

      g.backward(total);
      std::vector<std::vector<double>> grads =
          collect_grads(g, enc.params().params.size(), bound.leaf_of_param);
      sgd.step(enc.params(), grads, cfg.train.lr, cfg.train.momentum, norm);

      sum_total += lv;
      sum_clean += terms.clean.scalar_val() * norm;
      sum_adv += terms.adv.scalar_val() * norm;
      sum_alpha += is_infonce ? 0.5 : alpha_now;
      sum_d += d_batch;
      ++batches;
    }
    check(batches > 0, "pretrain: no usable batches (n=", n, ", batch_size=",
          cfg.train.batch_size, ")");
    if (annealing) anneal.end_epoch();

    double inv = 1.0 / static_cast<double>(batches);
    out.log.push_back({epoch, sum_total * inv, sum_clean * inv, sum_adv * inv, sum_alpha * inv,
                       sum_d * inv});
    last_good = enc.params();
  }

  out.encoder = enc;
  return out;
}

// ---------------------------------------------------------------- finetune

FinetuneResult finetune(const RunConfig& cfg, const Encoder& pretrained, const Dataset& train,
                        std::uint64_t seed) {
  cfg.validate();
  train.validate();
  const std::size_t n = train.size();
  check(n >= 1, "finetune: training set is empty");
  check(train.dim == pretrained.config().input_dim, "finetune: dataset dim ", train.dim,
        " does not match encoder input dim ", pretrained.config().input_dim);
  const std::size_t ncls = train.classes();
  check(ncls >= 2, "finetune: need at least 2 classes, got ", ncls);

  Encoder enc = pretrained;
  LinearClassifier clf = LinearClassifier::init(ncls, enc.config().feature_dim(),
                                                mix_seed(seed, seed_tag::classifier));
  const TrainConfig& tc = cfg.train;
  const FinetuneMode mode = tc.finetune_mode;
  const bool train_encoder = mode == FinetuneMode::aff;
  const bool adversarial = mode != FinetuneMode::lp;

  SgdState sgd_clf(clf.params());
  SgdState sgd_enc(enc.params());
  // Distinct stream family from pretraining so the phases never share draws.
  const std::uint64_t fseed = mix_seed(seed, seed_tag::classifier, 1);

  ParamStore last_good = merge_stores(enc.params(), clf.params());
  FinetuneResult out;
  out.log.reserve(static_cast<std::size_t>(tc.finetune_epochs));

  for (int epoch = 0; epoch < tc.finetune_epochs; ++epoch) {
    std::vector<std::size_t> order = epoch_order(n, fseed, static_cast<std::uint64_t>(epoch));
    Rng atk_rng(mix_seed(fseed, seed_tag::attack, static_cast<std::uint64_t>(epoch)));

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += tc.batch_size) {
      const std::size_t rows = std::min<std::size_t>(tc.batch_size, n - start);
      std::vector<double> x(rows * train.dim);
      std::vector<std::size_t> labels(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(train.row(order[start + r]), train.dim, x.data() + r * train.dim);
        labels[r] = train.y[order[start + r]];
      }
      if (adversarial) x = pgd_supervised(enc, clf, x, labels, cfg.attack_eval, atk_rng);

      ag::Graph g;
      Encoder::Bound eb = enc.bind(g, /*frozen=*/!train_encoder);
      LinearClassifier::Bound cb = clf.bind(g, /*frozen=*/false);
      ag::Tensor xt = g.constant(ag::Shape::mat(rows, train.dim), x);
      Encoder::Encoded e = enc.encode(g, eb, xt);
      ag::Tensor logits = clf.logits(g, cb, e.h);
      ag::Tensor L = ag::softmax_xent(logits, labels);
      double lv = L.scalar_val();
      if (!std::isfinite(lv))
        throw TrainAbort(msg("finetune: loss went non-finite at epoch ", epoch, ", batch ",
                             batches, "; keeping parameters from epoch ", epoch - 1),
                         last_good, epoch);

      g.backward(L);
      std::vector<std::vector<double>> cg =
          collect_grads(g, clf.params().params.size(), cb.leaf_of_param);
      sgd_clf.step(clf.params(), cg, tc.finetune_lr, tc.momentum, 1.0);
      if (train_encoder) {
        std::vector<std::vector<double>> eg =
            collect_grads(g, enc.params().params.size(), eb.leaf_of_param);
        sgd_enc.step(enc.params(), eg, tc.finetune_lr, tc.momentum, 1.0);
      }
      loss_sum += lv;
      ++batches;
    }
    out.log.emplace_back(epoch, loss_sum / static_cast<double>(batches));
    last_good = merge_stores(enc.params(), clf.params());
  }

  out.encoder = enc;
  out.classifier = clf;
  return out;
}

// ---------------------------------------------------------------- evaluate

EvalReport evaluate(const RunConfig& cfg, const Encoder& enc, const LinearClassifier& clf,
                    const Dataset& test, std::uint64_t seed) {
  cfg.validate();
  test.validate();
  const std::size_t n = test.size();
  check(n >= 1, "evaluate: test set is empty");
  check(test.dim == enc.config().input_dim, "evaluate: dataset dim ", test.dim,
        " does not match encoder input dim ", enc.config().input_dim);
  check(clf.feature_dim() == enc.config().feature_dim(),
        "evaluate: classifier expects feature dim ", clf.feature_dim(), ", encoder provides ",
        enc.config().feature_dim());
  const std::size_t ncls = clf.classes();
  for (std::size_t label : test.y)
    check(label < ncls, "evaluate: label ", label, " out of range for ", ncls, " classes");

  EvalReport rep;
  rep.per_class_total.assign(ncls, 0);
  rep.per_class_clean_correct.assign(ncls, 0);
  rep.per_class_adv_correct.assign(ncls, 0);

  auto argmax_row = [&](const std::vector<double>& logits, std::size_t r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < ncls; ++c)
      if (logits[r * ncls + c] > logits[r * ncls + best]) best = c;
    return best;
  };

  const std::size_t eval_batch = 256;  // affects attack RNG streams only
  std::size_t bi = 0;
  for (std::size_t start = 0; start < n; start += eval_batch, ++bi) {
    const std::size_t rows = std::min(eval_batch, n - start);
    std::vector<double> x(test.x.begin() + start * test.dim,
                          test.x.begin() + (start + rows) * test.dim);
    std::vector<std::size_t> labels(test.y.begin() + start, test.y.begin() + start + rows);

    std::vector<double> h;
    enc.embed(x, rows, &h, nullptr);
    std::vector<double> logits = clf.logits_values(h, rows);

    Rng rng(mix_seed(seed, seed_tag::eval, bi));
    std::vector<double> x_adv = pgd_supervised(enc, clf, x, labels, cfg.attack_eval, rng);
    std::vector<double> h_adv;
    enc.embed(x_adv, rows, &h_adv, nullptr);
    std::vector<double> logits_adv = clf.logits_values(h_adv, rows);

    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t y = labels[r];
      ++rep.per_class_total[y];
      if (argmax_row(logits, r) == y) ++rep.per_class_clean_correct[y];
      if (argmax_row(logits_adv, r) == y) ++rep.per_class_adv_correct[y];
    }
  }

  std::size_t clean = 0, adv = 0;
  for (std::size_t c = 0; c < ncls; ++c) {
    clean += rep.per_class_clean_correct[c];
    adv += rep.per_class_adv_correct[c];
  }
  rep.standard_accuracy = static_cast<double>(clean) / static_cast<double>(n);
  rep.robust_accuracy = static_cast<double>(adv) / static_cast<double>(n);
  return rep;
}

}  // namespace ainc

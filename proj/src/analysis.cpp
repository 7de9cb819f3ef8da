#include "ainc/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "ainc/common.hpp"

namespace ainc {

// ---------------------------------------------------------------- sweep

std::vector<SweepRow> alpha_sweep(const RunConfig& cfg, const Dataset& train,
                                  const Dataset& test, std::vector<double> alphas,
                                  std::uint64_t seed) {
  check(!alphas.empty(), "sweep: alpha list is empty");
  for (double a : alphas)
    check(std::isfinite(a) && a >= 0.0 && a <= 1.0, "sweep: alpha must be in [0, 1], got ", a);
  std::sort(alphas.begin(), alphas.end());
  for (std::size_t i = 1; i < alphas.size(); ++i)
    check(alphas[i] != alphas[i - 1], "sweep: duplicate alpha ", alphas[i]);

  std::vector<SweepRow> rows;
  rows.reserve(alphas.size());
  for (double a : alphas) {
    RunConfig c = cfg;
    c.loss.alpha = a;
    c.anneal.enabled = false;
    c.train.finetune_mode = FinetuneMode::lp;
    log::info("sweep: alpha=", a, " pretraining ", c.train.epochs, " epochs");
    PretrainResult pre = pretrain(c, train, seed);
    FinetuneResult ft = finetune(c, pre.encoder, train, seed);
    EvalReport ev = evaluate(c, ft.encoder, ft.classifier, test, seed);
    std::vector<double> z = embed_dataset(ft.encoder, test);
    double col = collapse_metric(z, test.size(), ft.encoder.config().proj_dim);
    rows.push_back({a, ev.standard_accuracy, ev.robust_accuracy, col});
  }
  return rows;
}

// ---------------------------------------------------------------- histogram

std::vector<HistRow> distance_histogram(const std::vector<double>& z, std::size_t rows,
                                        std::size_t cols, std::size_t bins) {
  check(bins >= 1, "histogram: bins must be >= 1, got ", bins);
  check(rows >= 2, "histogram: need at least 2 rows, got ", rows);
  check(cols >= 1 && z.size() == rows * cols, "histogram: buffer has ", z.size(),
        " values, expected ", rows, "x", cols);

  std::vector<std::size_t> counts(bins, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = i + 1; j < rows; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        double d = z[i * cols + c] - z[j * cols + c];
        acc += d * d;
      }
      double dist = std::sqrt(acc);
      auto bin = static_cast<std::size_t>(dist / 2.0 * static_cast<double>(bins));
      if (bin >= bins) bin = bins - 1;  // dist == 2 (or fp spill) lands in the top bin
      ++counts[bin];
      ++total;
    }
  }

  std::vector<HistRow> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lo = 2.0 * static_cast<double>(i) / static_cast<double>(bins);
    out[i].hi = 2.0 * static_cast<double>(i + 1) / static_cast<double>(bins);
    out[i].frequency = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return out;
}

// ---------------------------------------------------------------- CSV

namespace {

std::ofstream open_csv(const std::string& path, const std::string& config_hash,
                       std::uint64_t seed) {
  std::ofstream out(path);
  check(out.good(), "csv: cannot open '", path, "' for writing");
  out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  return out;
}

void close_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  check(out.good(), "csv: write to '", path, "' failed");
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const std::string& config_hash, std::uint64_t seed) {
  std::ofstream out = open_csv(path, config_hash, seed);
  out << "epoch,loss_total,loss_clean,loss_adv,alpha,d_mean\n";
  for (const MetricsRow& r : rows)
    out << r.epoch << ',' << fmt17(r.loss_total) << ',' << fmt17(r.loss_clean) << ','
        << fmt17(r.loss_adv) << ',' << fmt17(r.alpha) << ',' << fmt17(r.d_mean) << "\n";
  close_csv(out, path);
}

void write_finetune_csv(const std::string& path,
                        const std::vector<std::pair<int, double>>& rows,
                        const std::string& config_hash, std::uint64_t seed) {
  std::ofstream out = open_csv(path, config_hash, seed);
  out << "epoch,loss\n";
  for (const auto& [epoch, loss] : rows) out << epoch << ',' << fmt17(loss) << "\n";
  close_csv(out, path);
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& config_hash, std::uint64_t seed) {
  std::ofstream out = open_csv(path, config_hash, seed);
  out << "alpha,standard_accuracy,robust_accuracy,collapse_metric\n";
  for (const SweepRow& r : rows)
    out << fmt17(r.alpha) << ',' << fmt17(r.standard_accuracy) << ','
        << fmt17(r.robust_accuracy) << ',' << fmt17(r.collapse) << "\n";
  close_csv(out, path);
}

void write_hist_csv(const std::string& path, const std::vector<HistRow>& rows,
                    const std::string& config_hash, std::uint64_t seed) {
  std::ofstream out = open_csv(path, config_hash, seed);
  out << "bin_lo,bin_hi,frequency\n";
  for (const HistRow& r : rows)
    out << fmt17(r.lo) << ',' << fmt17(r.hi) << ',' << fmt17(r.frequency) << "\n";
  close_csv(out, path);
}

// ---------------------------------------------------------------- gradcheck

namespace {

using ag::Graph;
using ag::Shape;
using ag::Tensor;

std::vector<double> randn(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

struct Suite {
  const char* name;
  double tol;
  ag::FdReport report;
};

bool print_suite(std::ostream& out, const Suite& s) {
  bool ok = s.report.ok(s.tol);
  out << (ok ? "  [ok]   " : "  [FAIL] ") << s.name << "  max_rel=" << fmt17(s.report.max_rel)
      << " checked=" << s.report.checked;
  if (!s.report.skipped_leaves.empty()) out << " skipped_leaves=" << s.report.skipped_leaves.size();
  out << " tol=" << fmt17(s.tol) << "\n";
  if (!ok)
    for (const ag::FdIssue& i : s.report.worst)
      out << "         leaf " << i.leaf << "[" << i.component << "]: analytic=" << fmt17(i.analytic)
          << " fd=" << fmt17(i.fd) << " rel=" << fmt17(i.rel) << "\n";
  return ok;
}

}  // namespace

bool run_gradient_suites(std::ostream& out) {
  Rng rng(0x9da377c1u);
  std::vector<Suite> suites;

  {  // elementwise chain: add/sub/mul/scale/relu/exp/log/sum/mean
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(3, 4), randn(rng, 12)}, {Shape::mat(3, 4), randn(rng, 12)}};
    auto build = [](Graph&, const std::vector<Tensor>& v) {
      Tensor a = v[0], b = v[1];
      Tensor t1 = ag::sum(ag::mul(ag::relu(a), ag::sub(b, ag::scale(a, 0.7))));
      Tensor t2 = ag::mean(ag::vlog(ag::add(ag::vexp(a), ag::vexp(b))));
      return ag::add(t1, t2);
    };
    suites.push_back({"elementwise", 1e-6, ag::finite_diff_check(build, theta)});
  }

  {  // matmul in all three transpose arrangements
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(3, 4), randn(rng, 12)},
        {Shape::mat(4, 5), randn(rng, 20)},
        {Shape::mat(5, 4), randn(rng, 20)},
        {Shape::mat(3, 5), randn(rng, 15)}};
    auto build = [](Graph&, const std::vector<Tensor>& v) {
      Tensor p1 = ag::matmul(v[0], v[1]);                // (3,5)
      Tensor p2 = ag::matmul(v[0], v[2], false, true);   // (3,5)
      Tensor p3 = ag::matmul(v[3], v[0], true, false);   // (5,4)
      return ag::add(ag::sum(ag::mul(p1, p2)), ag::sum(p3));
    };
    suites.push_back({"matmul", 1e-6, ag::finite_diff_check(build, theta)});
  }

  {  // reductions, gather, concat, reshape, row dots
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(4, 3), randn(rng, 12)}, {Shape::mat(4, 3), randn(rng, 12)}};
    auto build = [](Graph&, const std::vector<Tensor>& v) {
      Tensor x = v[0], y = v[1];
      Tensor g1 = ag::mean(ag::gather_rows(x, {2, 0, 1, 2}));
      Tensor g2 = ag::sum(ag::dot_rows(x, y));
      Tensor cat = ag::mul(ag::concat_rows(x, y), ag::concat_rows(y, x));
      Tensor g3 = ag::sum(ag::reshape(cat, Shape::vec(24)));
      return ag::add(ag::add(g1, g2), g3);
    };
    suites.push_back({"reductions-gather", 1e-6, ag::finite_diff_check(build, theta)});
  }

  {  // row normalization and cross-entropy
    Rng mix(7);
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(5, 4), randn(rng, 20)}, {Shape::mat(5, 3), randn(rng, 15)}};
    std::vector<double> cvals = randn(mix, 20);
    auto build = [cvals](Graph& g, const std::vector<Tensor>& v) {
      Tensor z = ag::l2norm_rows(v[0]);
      Tensor c = g.constant(Shape::mat(5, 4), cvals);
      Tensor l1 = ag::sum(ag::mul(z, c));
      Tensor l2 = ag::softmax_xent(v[1], {0, 2, 1, 0, 2});
      return ag::add(l1, l2);
    };
    suites.push_back({"normalize-xent", 1e-5, ag::finite_diff_check(build, theta)});
  }

  {  // asymmetric similarity: per-row and anchor-matrix forms
    Rng mix(11);
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(3, 4), randn(rng, 12)}, {Shape::mat(3, 4), randn(rng, 12)},
        {Shape::mat(5, 4), randn(rng, 20)}};
    std::vector<double> wvals = randn(mix, 15);
    auto build = [wvals](Graph& g, const std::vector<Tensor>& v) {
      Tensor s1 = ag::sum(ag::sim_alpha(v[0], v[1], 0.3));
      Tensor w = g.constant(Shape::mat(3, 5), wvals);
      Tensor s2 = ag::sum(ag::mul(ag::asym_sim_matrix(v[0], v[2], 0.3), w));
      return ag::add(s1, s2);
    };
    suites.push_back({"asymmetric-similarity", 1e-6, ag::finite_diff_check(build, theta)});
  }

  {  // two-layer MLP with projection head and classifier, end to end
    const std::size_t in = 5, h0 = 8, h1 = 6, k = 4, ncls = 3, n = 4;
    Rng mix(13);
    std::vector<double> xvals = randn(mix, n * in);
    std::vector<double> cvals = randn(mix, n * k);
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(h0, in), randn(rng, h0 * in, 0.5)}, {Shape::vec(h0), randn(rng, h0, 0.1)},
        {Shape::mat(h1, h0), randn(rng, h1 * h0, 0.5)}, {Shape::vec(h1), randn(rng, h1, 0.1)},
        {Shape::mat(k, h1), randn(rng, k * h1, 0.5)},   {Shape::vec(k), randn(rng, k, 0.1)},
        {Shape::mat(ncls, h1), randn(rng, ncls * h1, 0.5)}, {Shape::vec(ncls), randn(rng, ncls, 0.1)}};
    auto build = [=](Graph& g, const std::vector<Tensor>& v) {
      Tensor x = g.constant(Shape::mat(n, in), xvals);
      Tensor a = ag::relu(ag::add(ag::matmul(x, v[0], false, true), v[1]));
      Tensor h = ag::add(ag::matmul(a, v[2], false, true), v[3]);
      Tensor z = ag::l2norm_rows(ag::add(ag::matmul(h, v[4], false, true), v[5]));
      Tensor c = g.constant(Shape::mat(n, k), cvals);
      Tensor logits = ag::add(ag::matmul(h, v[6], false, true), v[7]);
      return ag::add(ag::sum(ag::mul(z, c)), ag::softmax_xent(logits, {0, 2, 1, 1}));
    };
    suites.push_back({"mlp-projection", 1e-5, ag::finite_diff_check(build, theta)});
  }

  {  // every batched contrastive loss through row normalization, B=3
    const std::size_t b = 3, k = 4;
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(3 * b, k), randn(rng, 3 * b * k)}};
    auto mk = [b](loss::LossKind kind) {
      return [b, kind](Graph& g, const std::vector<Tensor>& v) {
        Tensor z = ag::l2norm_rows(v[0]);
        loss::LossConfig cfg;
        cfg.kind = kind;
        cfg.temperature = 0.5;
        cfg.gamma = 0.7;
        cfg.tau = 0.1;
        cfg.weight_mode = loss::WeightMode::similarity;
        return loss::build_loss(g, z, b, cfg, 0.3, nullptr);
      };
    };
    suites.push_back({"loss-contrastive", 1e-5,
                      ag::finite_diff_check(mk(loss::LossKind::infonce), theta)});
    suites.push_back({"loss-asymmetric", 1e-5,
                      ag::finite_diff_check(mk(loss::LossKind::ip), theta)});
    suites.push_back({"loss-debiased", 1e-5,
                      ag::finite_diff_check(mk(loss::LossKind::hn), theta)});
    suites.push_back({"loss-combined", 1e-5,
                      ag::finite_diff_check(mk(loss::LossKind::ip_hn), theta)});
  }

  {  // attack-style gradient: input through a frozen encoder
    MlpConfig mcfg;
    mcfg.input_dim = 5;
    mcfg.hidden = {8, 6};
    mcfg.proj_dim = 4;
    Encoder enc = Encoder::init(mcfg, 42);
    Rng mix(17);
    std::vector<double> cvals = randn(mix, 4 * 4);
    std::vector<std::pair<Shape, std::vector<double>>> theta = {
        {Shape::mat(4, 5), randn(rng, 20, 0.3)}};
    auto build = [&enc, cvals](Graph& g, const std::vector<Tensor>& v) {
      Encoder::Bound bound = enc.bind(g, /*frozen=*/true);
      Encoder::Encoded e = enc.encode(g, bound, v[0]);
      Tensor c = g.constant(Shape::mat(4, 4), cvals);
      return ag::sum(ag::mul(e.z, c));
    };
    suites.push_back({"input-through-frozen-encoder", 1e-5, ag::finite_diff_check(build, theta)});
  }

  bool all_ok = true;
  for (const Suite& s : suites) all_ok = print_suite(out, s) && all_ok;
  return all_ok;
}

}  // namespace ainc

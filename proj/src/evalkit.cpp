#include "slim/evalkit.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "slim/error.hpp"
#include "slim/parallel.hpp"
#include "slim/rng.hpp"
#include "slim/train.hpp"
#include "slim/views.hpp"

namespace slim {

Eigen::VectorXd extract_representation(const EncoderParams<float>& encoder,
                                       const SkeletonSequence& seq, const ModelConfig& cfg,
                                       RepresentationSource source) {
  const View v = extract_view(seq, Interval{0, seq.frames - 1}, cfg.frames);
  const Mat<float> in = patchify<float>(v.sequence, cfg);
  const Encoded<float> enc = encode<float>(in, nullptr, encoder, cfg);
  if (source == RepresentationSource::Cls) return enc.cls().transpose().cast<double>();
  return enc.patches().colwise().mean().transpose().cast<double>();
}

MatD extract_representations(const EncoderParams<float>& encoder,
                             const std::vector<const SkeletonSequence*>& seqs,
                             const ModelConfig& cfg, RepresentationSource source, int workers) {
  MatD out(seqs.size(), cfg.dim);
  parallel_for(seqs.size(), workers, [&](std::size_t i) {
    out.row(i) = extract_representation(encoder, *seqs[i], cfg, source).transpose();
  });
  return out;
}

namespace {

int count_classes(const std::vector<int>& a, const std::vector<int>& b) {
  int c = 0;
  for (int y : a) {
    if (y < 0) throw ValidationError("labels must be non-negative");
    c = std::max(c, y + 1);
  }
  for (int y : b) {
    if (y < 0) throw ValidationError("labels must be non-negative");
    c = std::max(c, y + 1);
  }
  return c;
}

double accuracy(const MatD& x, const std::vector<int>& y, const MatD& w, const MatD& b) {
  if (x.rows() == 0) return 0.0;
  const MatD logits = (x * w).rowwise() + b.row(0);
  int correct = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg;
    logits.row(i).maxCoeff(&arg);
    correct += static_cast<int>(arg) == y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows());
}

}  // namespace

ProbeResult linear_probe(const MatD& train_x, const std::vector<int>& train_y, const MatD& test_x,
                         const std::vector<int>& test_y, const ProbeConfig& cfg) {
  cfg.validate();
  if (train_x.rows() != static_cast<Eigen::Index>(train_y.size()) ||
      test_x.rows() != static_cast<Eigen::Index>(test_y.size()))
    throw ValidationError("linear_probe: feature and label counts differ");
  if (train_x.rows() == 0) throw ValidationError("linear_probe: empty training set");
  if (test_x.rows() > 0 && test_x.cols() != train_x.cols())
    throw ValidationError("linear_probe: train and test feature dims differ");
  {
    std::vector<int> distinct = train_y;
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
      throw ValidationError("linear_probe: training labels contain a single class");
  }
  const int c = count_classes(train_y, test_y);
  const int d = static_cast<int>(train_x.cols());
  const int n = static_cast<int>(train_x.rows());

  MatD xtr = train_x, xte = test_x;
  if (cfg.standardize) {
    const Eigen::RowVectorXd mean = xtr.colwise().mean();
    Eigen::RowVectorXd sd = ((xtr.rowwise() - mean).array().square().colwise().mean()).sqrt();
    sd = sd.unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; });
    xtr = (xtr.rowwise() - mean).array().rowwise() / sd.array();
    if (xte.rows() > 0) xte = (xte.rowwise() - mean).array().rowwise() / sd.array();
  }

  MatD w = MatD::Zero(d, c), b = MatD::Zero(1, c);
  MatD gw(d, c), gb(1, c);
  MatD mw = MatD::Zero(d, c), mb = MatD::Zero(1, c), vw = MatD::Zero(d, c), vb = MatD::Zero(1, c);
  const std::vector<ParamRef<double>> params = {{"w", &w, true}, {"b", &b, false}};
  const std::vector<ParamRef<double>> grads = {{"w", &gw, true}, {"b", &gb, false}};
  const std::vector<ParamRef<double>> m = {{"w", &mw, true}, {"b", &mb, false}};
  const std::vector<ParamRef<double>> v = {{"w", &vw, true}, {"b", &vb, false}};
  TrainConfig opt;
  opt.weight_decay = cfg.weight_decay;

  const int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total = static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs;
  std::int64_t step = 0;
  Rng rng(cfg.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < cfg.epochs; ++e) {
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    for (int s = 0; s < n; s += cfg.batch_size) {
      const int m_rows = std::min(cfg.batch_size, n - s);
      MatD xb(m_rows, d);
      for (int r = 0; r < m_rows; ++r) xb.row(r) = xtr.row(order[s + r]);
      MatD p = softmax_temp((xb * w).rowwise() + b.row(0), 1.0);
      for (int r = 0; r < m_rows; ++r) p(r, train_y[order[s + r]]) -= 1.0;
      p /= m_rows;
      gw = xb.transpose() * p;
      gb = p.colwise().sum();
      const double lr =
          0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total));
      ++step;
      adamw_update<double>(params, grads, m, v, step, lr, opt);
    }
  }

  ProbeResult res;
  res.n_train = n;
  res.n_test = static_cast<int>(test_x.rows());
  res.train_accuracy = accuracy(xtr, train_y, w, b);
  res.accuracy = accuracy(xte, test_y, w, b);
  return res;
}

double knn_retrieve(const MatD& gallery_x, const std::vector<int>& gallery_y, const MatD& query_x,
                    const std::vector<int>& query_y, int k) {
  if (gallery_x.rows() == 0) throw ValidationError("knn_retrieve: empty gallery");
  if (gallery_x.rows() != static_cast<Eigen::Index>(gallery_y.size()) ||
      query_x.rows() != static_cast<Eigen::Index>(query_y.size()))
    throw ValidationError("knn_retrieve: feature and label counts differ");
  if (query_x.rows() > 0 && query_x.cols() != gallery_x.cols())
    throw ValidationError("knn_retrieve: gallery and query dims differ");
  if (k < 1) throw ValidationError("knn_retrieve: k must be >= 1");
  if (query_x.rows() == 0) return 0.0;
  auto normalize = [](MatD m) {
    for (int i = 0; i < m.rows(); ++i) m.row(i) /= std::max(m.row(i).norm(), 1e-12);
    return m;
  };
  const MatD g = normalize(gallery_x), q = normalize(query_x);
  const MatD sim = q * g.transpose();
  const int kk = std::min<int>(k, static_cast<int>(g.rows()));
  int correct = 0;
  std::vector<int> idx(g.rows());
  for (int i = 0; i < q.rows(); ++i) {
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), [&](int a, int b) {
      if (sim(i, a) != sim(i, b)) return sim(i, a) > sim(i, b);
      return a < b;
    });
    std::map<int, std::pair<int, int>> votes;  // label -> (count, best rank)
    for (int r = 0; r < kk; ++r) {
      auto [it, fresh] = votes.try_emplace(gallery_y[idx[r]], 0, r);
      it->second.first += 1;
    }
    int best_label = -1, best_count = -1, best_rank = 0;
    for (const auto& [label, cv] : votes)
      if (cv.first > best_count || (cv.first == best_count && cv.second < best_rank)) {
        best_label = label;
        best_count = cv.first;
        best_rank = cv.second;
      }
    correct += best_label == query_y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(q.rows());
}

FlopsBreakdown count_flops(const ModelConfig& cfg, std::int64_t n_tokens, std::int64_t n_patches) {
  if (n_tokens < 1) throw ValidationError("count_flops: n_tokens must be >= 1");
  if (n_patches < 0) n_patches = n_tokens - 1;
  const std::int64_t n = n_tokens, d = cfg.dim, l = cfg.layers;
  const std::int64_t hidden = static_cast<std::int64_t>(cfg.mlp_ratio) * d;
  FlopsBreakdown f;
  f.patch_projection = 2 * n_patches * cfg.patch_dim() * d;
  f.qkv = 2 * l * 3 * n * d * d;
  f.scores = 2 * l * n * n * d;
  f.attn_values = 2 * l * n * n * d;
  f.out_proj = 2 * l * n * d * d;
  f.mlp = 2 * l * 2 * n * d * hidden;
  f.total = f.patch_projection + f.qkv + f.scores + f.attn_values + f.out_proj + f.mlp;
  return f;
}

std::vector<FlopsScenario> default_flops_scenarios() {
  return {{"mae_pretrain_encoder", 76, "", 0.0},
          {"mae_inference", 751, "mae_pretrain_encoder", 14.38},
          {"slim_pretrain", 201, "", 0.0},
          {"slim_inference", 201, "slim_pretrain", 1.0},
          {"mae_inference_vs_slim", 751, "slim_inference", 7.89}};
}

std::vector<FlopsRow> flops_report(const ModelConfig& cfg, const std::vector<FlopsScenario>& scenarios) {
  std::map<std::string, std::int64_t> by_name;
  for (const auto& s : scenarios) by_name[s.name] = count_flops(cfg, s.tokens).total;
  std::vector<FlopsRow> rows;
  for (const auto& s : scenarios) {
    FlopsRow r;
    r.scenario = s.name;
    r.tokens = s.tokens;
    const std::int64_t f = by_name.at(s.name);
    r.gflops = static_cast<double>(f) / 1e9;
    r.baseline = s.baseline.empty() ? s.name : s.baseline;
    auto it = by_name.find(r.baseline);
    if (it == by_name.end())
      throw ValidationError("flops scenario '" + s.name + "' references unknown baseline '" + s.baseline + "'");
    r.ratio = static_cast<double>(f) / static_cast<double>(it->second);
    r.paper_ratio = s.paper_ratio;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace slim

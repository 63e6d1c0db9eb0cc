#include "skssl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "skssl/layers.hpp"
#include "skssl/loss.hpp"
#include "skssl/net.hpp"
#include "skssl/optim.hpp"
#include "skssl/rng.hpp"

namespace skssl {

void validate_feature_set(const FeatureSet& fs) {
  if (fs.rows.rank() != 2) {
    throw ValidationError("feature set must be [N, D], got " + shape_str(fs.rows.shape));
  }
  if (fs.rows.dim(0) == 0 || fs.rows.dim(1) == 0) {
    throw ValidationError("empty feature set");
  }
  if (fs.labels.size() != fs.rows.dim(0)) {
    throw ValidationError("feature set has " + std::to_string(fs.rows.dim(0)) + " rows but " +
                          std::to_string(fs.labels.size()) + " labels");
  }
  check_finite(fs.rows, "feature set");
}

std::vector<std::size_t> rank_gallery(const float* query, const Tensor<float>& gallery) {
  if (gallery.rank() != 2 || gallery.dim(0) == 0) {
    throw ValidationError("gallery must be a non-empty [G, D] matrix");
  }
  const std::size_t G = gallery.dim(0), D = gallery.dim(1);
  std::vector<double> dist(G);
  for (std::size_t g = 0; g < G; ++g) {
    const float* row = gallery.ptr() + g * D;
    double acc = 0;
    for (std::size_t d = 0; d < D; ++d) {
      const float diff = query[d] - row[d];
      acc += static_cast<double>(diff) * static_cast<double>(diff);
    }
    dist[g] = acc;  // squared distance ranks identically to distance
  }
  std::vector<std::size_t> order(G);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  return order;
}

namespace {

void check_aligned(const std::vector<std::vector<std::size_t>>& rankings,
                   const std::vector<int>& query_labels,
                   const std::vector<int>& gallery_labels) {
  if (rankings.empty()) throw ValidationError("no rankings");
  if (rankings.size() != query_labels.size()) {
    throw ValidationError("rankings and query labels disagree in length");
  }
  for (const auto& r : rankings) {
    if (r.size() != gallery_labels.size()) {
      throw ValidationError("ranking length does not match gallery label count");
    }
  }
}

}  // namespace

double acc_top1(const std::vector<std::vector<std::size_t>>& rankings,
                const std::vector<int>& query_labels, const std::vector<int>& gallery_labels) {
  check_aligned(rankings, query_labels, gallery_labels);
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    hits += gallery_labels[rankings[q].front()] == query_labels[q];
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double average_precision_at10(const std::vector<std::size_t>& ranking, int query_label,
                              const std::vector<int>& gallery_labels) {
  std::size_t relevant = 0;
  for (int l : gallery_labels) relevant += l == query_label;
  if (relevant == 0) return 0.0;
  const std::size_t K = std::min<std::size_t>(10, ranking.size());
  double ap = 0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (gallery_labels[ranking[k]] == query_label) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(std::min<std::size_t>(10, relevant));
}

double map_top10(const std::vector<std::vector<std::size_t>>& rankings,
                 const std::vector<int>& query_labels, const std::vector<int>& gallery_labels) {
  check_aligned(rankings, query_labels, gallery_labels);
  double sum = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    sum += average_precision_at10(rankings[q], query_labels[q], gallery_labels);
  }
  return sum / static_cast<double>(rankings.size());
}

RetrievalReport retrieval_eval(const FeatureSet& query, const FeatureSet& gallery) {
  validate_feature_set(query);
  validate_feature_set(gallery);
  if (query.rows.dim(1) != gallery.rows.dim(1)) {
    throw ValidationError("query dim " + std::to_string(query.rows.dim(1)) +
                          " does not match gallery dim " + std::to_string(gallery.rows.dim(1)));
  }
  const std::size_t Q = query.rows.dim(0), D = query.rows.dim(1);
  std::vector<std::vector<std::size_t>> rankings(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    rankings[q] = rank_gallery(query.rows.ptr() + q * D, gallery.rows);
  }
  RetrievalReport rep;
  rep.acc_top1 = acc_top1(rankings, query.labels, gallery.labels);
  rep.map_top10 = map_top10(rankings, query.labels, gallery.labels);
  rep.query_count = Q;
  rep.gallery_count = gallery.rows.dim(0);
  return rep;
}

ProbeReport linear_probe(const FeatureSet& train, const FeatureSet& test,
                         const ProbeConfig& cfg) {
  validate_feature_set(train);
  validate_feature_set(test);
  if (train.rows.dim(1) != test.rows.dim(1)) {
    throw ValidationError("train dim " + std::to_string(train.rows.dim(1)) +
                          " does not match test dim " + std::to_string(test.rows.dim(1)));
  }
  if (cfg.epochs == 0) throw ValidationError("probe needs at least one epoch");

  // Contiguous class ids over the train labels; test-only labels are flagged.
  std::map<int, int> class_of;
  for (int l : train.labels) class_of.emplace(l, 0);
  int next = 0;
  for (auto& [label, id] : class_of) id = next++;
  const std::size_t C = class_of.size();
  const std::size_t D = train.rows.dim(1), N = train.rows.dim(0);

  std::vector<int> train_ids(N);
  for (std::size_t i = 0; i < N; ++i) train_ids[i] = class_of.at(train.labels[i]);

  NetGraph<float> net;
  net.add(std::make_unique<FullyConnected<float>>(D, C));
  net.set_input_shape({D});
  net.init_params(derive_seed(cfg.seed, "probe/init"));
  net.set_mode(NetMode::Train);
  Sgd<float> opt(cfg.lr);
  Rng rng = make_rng(cfg.seed, "probe/shuffle");

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch);
  double last_loss = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t at = 0; at < N; at += batch) {
      const std::size_t n = std::min(batch, N - at);
      Tensor<float> x({n, D});
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[at + i];
        std::copy_n(train.rows.ptr() + src * D, D, x.data.begin() + i * D);
        y[i] = train_ids[src];
      }
      auto out = net.forward(x);
      auto lr = softmax_xent(out, y);
      net.zero_grads();
      net.backward(lr.dlogits);
      opt.step(net.params());
      loss_sum += static_cast<double>(lr.loss) * n;
      seen += n;
    }
    last_loss = loss_sum / static_cast<double>(seen);
  }

  net.set_mode(NetMode::Eval);
  auto logits = net.forward(test.rows);
  std::vector<int> id_to_label(C);
  for (const auto& [label, id] : class_of) id_to_label[id] = label;

  std::map<int, ProbeClassStat> stats;
  for (const auto& [label, id] : class_of) {
    stats[label].label = label;
  }
  for (int l : train.labels) ++stats[l].train_count;

  std::size_t correct = 0;
  const std::size_t T = test.rows.dim(0);
  for (std::size_t i = 0; i < T; ++i) {
    const float* row = logits.ptr() + i * C;
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c)
      if (row[c] > row[best]) best = c;
    const int predicted = id_to_label[best];
    auto& st = stats[test.labels[i]];
    st.label = test.labels[i];
    ++st.test_count;
    if (predicted == test.labels[i]) {
      ++st.test_correct;
      ++correct;
    }
  }

  ProbeReport rep;
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(T);
  rep.final_train_loss = last_loss;
  for (auto& [label, st] : stats) {
    st.accuracy = st.test_count == 0
                      ? 0.0
                      : static_cast<double>(st.test_correct) / static_cast<double>(st.test_count);
    rep.classes.push_back(st);
    if (st.train_count == 0) rep.untrained_labels.push_back(label);
  }
  return rep;
}

}  // namespace skssl

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skssl/tensor.hpp"

namespace skssl {

// Labeled feature matrix, one row per sketch.
struct FeatureSet {
  Tensor<float> rows;       // [N, D]
  std::vector<int> labels;  // N
};

void validate_feature_set(const FeatureSet& fs);

// Gallery row indices in ascending Euclidean order from the query row.
// Differences are taken in 32-bit, squares accumulate in 64-bit; exact ties
// keep the lower index first.
std::vector<std::size_t> rank_gallery(const float* query, const Tensor<float>& gallery);

// Fraction of queries whose rank-1 gallery item shares the query label.
double acc_top1(const std::vector<std::vector<std::size_t>>& rankings,
                const std::vector<int>& query_labels, const std::vector<int>& gallery_labels);

// Truncated average precision of one ranked list:
// AP = sum_{k<=min(10,G)} P@k * rel(k) / min(10, R), R = relevant gallery
// count. R = 0 scores 0.
double average_precision_at10(const std::vector<std::size_t>& ranking, int query_label,
                              const std::vector<int>& gallery_labels);

// Mean AP@10 over all queries.
double map_top10(const std::vector<std::vector<std::size_t>>& rankings,
                 const std::vector<int>& query_labels, const std::vector<int>& gallery_labels);

struct RetrievalReport {
  double acc_top1 = 0;
  double map_top10 = 0;
  std::size_t query_count = 0;
  std::size_t gallery_count = 0;
};

// Ranks every query against the gallery and aggregates both metrics.
RetrievalReport retrieval_eval(const FeatureSet& query, const FeatureSet& gallery);

struct ProbeConfig {
  std::size_t epochs = 100;
  std::size_t batch = 64;
  double lr = 0.1;
  std::uint64_t seed = 1;
};

struct ProbeClassStat {
  int label = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t test_correct = 0;
  double accuracy = 0;  // over this class's test rows; 0 when test_count is 0
};

struct ProbeReport {
  double accuracy = 0;
  std::vector<ProbeClassStat> classes;   // union of train/test labels, ascending
  std::vector<int> untrained_labels;     // present in test, absent in train
  double final_train_loss = 0;
};

// Trains one fully connected layer plus softmax on frozen train features and
// scores it on the test features. Labels may be any ints; classes the probe
// never saw in training are flagged and necessarily scored wrong.
ProbeReport linear_probe(const FeatureSet& train, const FeatureSet& test,
                         const ProbeConfig& cfg = {});

}  // namespace skssl

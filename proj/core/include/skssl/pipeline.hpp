#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skssl/checkpoint.hpp"
#include "skssl/deform.hpp"
#include "skssl/extractors.hpp"
#include "skssl/optim.hpp"
#include "skssl/raster.hpp"

namespace skssl {

// A pretext task: 4-way rotation classification, or binary detection of one
// deformation. L is the class count the task's softmax sees.
struct PretextTask {
  enum class Kind { Rotation4, DeformBinary };
  Kind kind = Kind::Rotation4;
  DeformSpec spec;  // DeformBinary only

  std::size_t classes() const { return kind == Kind::Rotation4 ? 4 : 2; }
  std::string tag() const { return kind == Kind::Rotation4 ? "R" : spec.name; }
};

PretextTask rotation_task();
PretextTask deform_task(const DeformSpec& spec);
// "R", a preset name, or an '&'-joined composition of presets ("HC&VC").
PretextTask parse_task(const std::string& name, double intensity = kDefaultIntensity);
// Comma-separated task names. Must be non-empty and contain "R" exactly once.
std::vector<PretextTask> parse_task_list(const std::string& csv,
                                         double intensity = kDefaultIntensity);

struct PretextBatch {
  Tensor<float> cnn;        // [N*L, 3, side, side]
  Tensor<float> tcn;        // [N*L, 1, rows, 4]
  std::vector<int> labels;  // N*L, balanced
};

// Expands each sketch into L labeled transforms. Rotation is applied to
// stroke coordinates and the raster re-rendered, so both branches see the
// same object. Label 0 of a deformation task is the untouched sketch.
PretextBatch gen_pretext_batch(const PretextTask& task, const std::vector<PointSeq>& samples,
                               const RenderConfig& rcfg);

enum class Branch { Cnn, Tcn };
std::string branch_name(Branch b);

struct OptimizerConfig {
  std::string kind = "sgd";
  double lr = 0.1;
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_samples = 64;  // generated samples per step (sketches x L)
  std::size_t patience = 5;
  OptimizerConfig cnn_opt{"sgd", 0.1};
  OptimizerConfig tcn_opt{"adam", 0.001};
  RenderConfig render;
  std::uint64_t seed = 1;
};

struct EpochStats {
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // index into epochs
  double best_val_acc = 0.0;
};

struct ExtractorConfigs {
  TcnConfig tcn;
  CnnConfig cnn;
};

struct TrainedModule {
  NetGraph<float> net;
  TrainHistory history;
};

// Seed for one (task, branch) training job; independent of bank loop order.
std::uint64_t module_seed(std::uint64_t master, const PretextTask& task, Branch branch);

// Trains one branch of one module from scratch and returns the graph restored
// to its best validation epoch. Early stops after `patience` epochs without a
// validation improvement. Throws DivergenceError on a non-finite loss.
TrainedModule train_module(const PretextTask& task, Branch branch,
                           const std::vector<PointSeq>& train_data,
                           const std::vector<PointSeq>& val_data,
                           const ExtractorConfigs& nets, const TrainConfig& cfg);

struct BankModule {
  PretextTask task;
  NetGraph<float> cnn;
  NetGraph<float> tcn;
  TrainHistory cnn_history;
  TrainHistory tcn_history;
};

// The rotation module plus J deformation sub-modules, all sharing feature_dim.
struct ModuleBank {
  BankModule rotation;
  std::vector<BankModule> deforms;
  std::size_t feature_dim = 0;
  std::uint64_t seed = 0;

  std::size_t module_count() const { return 1 + deforms.size(); }
};

// Freshly initialized, untrained bank under the same per-module seed protocol
// training would use.
ModuleBank init_bank(const std::vector<PretextTask>& tasks, const ExtractorConfigs& nets,
                     std::uint64_t seed);

// Trains every module independently: rotation first, then each deformation
// sub-module, CNN and TCN branches separately.
ModuleBank train_bank(const std::vector<PretextTask>& tasks,
                      const std::vector<PointSeq>& train_data,
                      const std::vector<PointSeq>& val_data, const ExtractorConfigs& nets,
                      const TrainConfig& cfg);

// Switches every net to eval mode and detaches classifier heads. Required
// before any feature extraction; banks cannot be trained afterwards.
void prepare_for_extraction(ModuleBank& bank);

struct FusionWeights {
  double lambda_r = 1.0;
  std::vector<double> lambda_d;
  double mu_r = 0.5;
  std::vector<double> mu_d;
};

// lambda uniform at 1/(J+1), mu 0.5 everywhere.
FusionWeights default_fusion(std::size_t j_modules);
void validate_fusion(const FusionWeights& w, std::size_t j_modules);

// Elementwise mu*cnn + (1-mu)*tcn.
FeatureVector fuse_module(const FeatureVector& cnn_feat, const FeatureVector& tcn_feat,
                          double mu);

// Weighted sum of fused module features for a batch of sketches: [N, feature_dim].
Tensor<float> fuse_bank_features(ModuleBank& bank, const FusionWeights& w,
                                 const std::vector<PointSeq>& samples,
                                 const RenderConfig& rcfg);

// Single-sample convenience over fuse_bank_features.
FeatureVector fuse_bank(ModuleBank& bank, const FusionWeights& w, const PointSeq& seq,
                        const RenderConfig& rcfg);

// Bank directory: manifest.json plus one checkpoint per (module, branch).
void save_bank(ModuleBank& bank, const FusionWeights& w, std::uint64_t config_hash,
               const std::filesystem::path& dir);
ModuleBank load_bank(const std::filesystem::path& dir, FusionWeights* weights_out = nullptr,
                     std::uint64_t* config_hash_out = nullptr);

}  // namespace skssl

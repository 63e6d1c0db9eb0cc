#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "skssl/eval.hpp"
#include "skssl/loss.hpp"
#include "skssl/pipeline.hpp"

using namespace skssl;
using testutil::make_seq;
using testutil::rand_seq;
using testutil::scratch_dir;

namespace {

ExtractorConfigs tiny_nets() {
  ExtractorConfigs nets;
  nets.tcn.kernel_sizes = {2, 4};
  nets.tcn.layer_channels = {2, 2, 2, 2};
  nets.tcn.feature_dim = 8;
  nets.cnn.input_side = 16;
  nets.cnn.block_channels = {4, 8};
  nets.cnn.feature_dim = 8;
  return nets;
}

TrainConfig tiny_train(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_samples = 16;
  cfg.patience = 1;
  cfg.render = RenderConfig{16, 0};
  cfg.seed = seed;
  return cfg;
}

std::vector<PointSeq> synth_data(std::uint64_t seed, int n) {
  Rng rng = make_rng(seed, "pipeline/data");
  std::vector<PointSeq> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(rand_seq(rng));
  return out;
}

Tensor<float> batch_cnn_inputs(const std::vector<PointSeq>& samples, const RenderConfig& rcfg) {
  Tensor<float> in({samples.size(), 3, rcfg.side, rcfg.side});
  const std::size_t vol = 3 * rcfg.side * rcfg.side;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor<float> t = tile_channels(render(samples[i], rcfg));
    std::copy(t.data.begin(), t.data.end(), in.data.begin() + i * vol);
  }
  return in;
}

Tensor<float> batch_tcn_inputs(const std::vector<PointSeq>& samples) {
  Tensor<float> in({samples.size(), 1, static_cast<std::size_t>(kSeqRows),
                    static_cast<std::size_t>(kSeqCols)});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EncodedSeq enc = encode(samples[i]);
    std::copy(enc.rows.begin(), enc.rows.end(),
              in.data.begin() + i * (kSeqRows * kSeqCols));
  }
  return in;
}

// mu*cnn + (1-mu)*tcn for one module, recomputed outside the bank code path.
Tensor<float> module_feats(BankModule& m, double mu, const std::vector<PointSeq>& samples,
                           const RenderConfig& rcfg) {
  const Tensor<float> fc = extract_batch(m.cnn, batch_cnn_inputs(samples, rcfg));
  const Tensor<float> ft = extract_batch(m.tcn, batch_tcn_inputs(samples));
  Tensor<float> out(fc.shape);
  const float mf = static_cast<float>(mu);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.data[i] = mf * fc.data[i] + (1.0f - mf) * ft.data[i];
  }
  return out;
}

bool cnn_row_equals(const PretextBatch& batch, std::size_t row, const Tensor<float>& vol) {
  const std::size_t n = vol.numel();
  return std::equal(vol.data.begin(), vol.data.end(), batch.cnn.data.begin() + row * n);
}

bool tcn_row_equals(const PretextBatch& batch, std::size_t row, const EncodedSeq& enc) {
  return std::equal(enc.rows.begin(), enc.rows.end(),
                    batch.tcn.data.begin() + row * (kSeqRows * kSeqCols));
}

bool params_equal(NetGraph<float>& a, NetGraph<float>& b) {
  auto pa = a.params();
  auto pb = b.params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || pa[i].value->data != pb[i].value->data) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("task parsing") {
  const PretextTask r = parse_task("R");
  CHECK(r.kind == PretextTask::Kind::Rotation4);
  CHECK(r.classes() == 4);
  CHECK(r.tag() == "R");

  const PretextTask hc = parse_task("HC", 0.3);
  CHECK(hc.kind == PretextTask::Kind::DeformBinary);
  CHECK(hc.classes() == 2);
  CHECK(hc.tag() == "HC");
  REQUIRE(hc.spec.x_axis.size() == 1);
  CHECK(hc.spec.x_axis[0].eta == 0.3);
  CHECK(hc.spec.y_axis.empty());

  // Default intensity applies when none is given.
  CHECK(parse_task("VC").spec.y_axis.at(0).eta == kDefaultIntensity);

  const PretextTask both = parse_task("HC&VC");
  CHECK(both.tag() == "HC&VC");
  CHECK(both.spec.x_axis.size() == 1);
  CHECK(both.spec.y_axis.size() == 1);

  CHECK_THROWS_AS(parse_task("bogus"), ValidationError);
  CHECK_THROWS_AS(parse_task(""), ValidationError);
  CHECK_THROWS_AS(parse_task("HC&"), ValidationError);
}

TEST_CASE("task list parsing") {
  const auto tasks = parse_task_list("R,HC,VC");
  REQUIRE(tasks.size() == 3);
  CHECK(tasks[0].tag() == "R");
  CHECK(tasks[1].tag() == "HC");
  CHECK(tasks[2].tag() == "VC");

  const auto spaced = parse_task_list(" R , HC ");
  REQUIRE(spaced.size() == 2);
  CHECK(spaced[1].tag() == "HC");

  // Intensity reaches every deformation task.
  CHECK(parse_task_list("R,HC", 0.2)[1].spec.x_axis[0].eta == 0.2);

  CHECK_THROWS_AS(parse_task_list("HC,VC"), ValidationError);   // no rotation
  CHECK_THROWS_AS(parse_task_list("R,R"), ValidationError);     // duplicate rotation
  CHECK_THROWS_AS(parse_task_list("R,HC,HC"), ValidationError); // duplicate deform
  CHECK_THROWS_AS(parse_task_list(""), ValidationError);
  CHECK_THROWS_AS(parse_task_list(" , "), ValidationError);
}

TEST_CASE("module seeds are distinct and order-free") {
  const PretextTask r = parse_task("R");
  const PretextTask hc = parse_task("HC");
  std::set<std::uint64_t> seeds;
  for (const PretextTask* t : {&r, &hc}) {
    for (Branch br : {Branch::Cnn, Branch::Tcn}) {
      seeds.insert(module_seed(77, *t, br));
    }
  }
  CHECK(seeds.size() == 4);
  CHECK(module_seed(77, r, Branch::Cnn) == module_seed(77, r, Branch::Cnn));
  CHECK(module_seed(77, r, Branch::Cnn) != module_seed(78, r, Branch::Cnn));
}

TEST_CASE("rotation batches expand each sketch into four labeled turns") {
  const RenderConfig rcfg{16, 0};
  const auto samples = synth_data(3, 8);
  const PretextTask task = rotation_task();
  const PretextBatch batch = gen_pretext_batch(task, samples, rcfg);

  REQUIRE(batch.labels.size() == 32);
  CHECK(batch.cnn.shape == std::vector<std::size_t>({32, 3, 16, 16}));
  CHECK(batch.tcn.shape == std::vector<std::size_t>({32, 1, 100, 4}));

  const RotationAngle angles[4] = {RotationAngle::Deg0, RotationAngle::Deg90,
                                   RotationAngle::Deg180, RotationAngle::Deg270};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t l = 0; l < 4; ++l) {
      const std::size_t row = i * 4 + l;
      CHECK(batch.labels[row] == static_cast<int>(l));
      const PointSeq turned = rotate(samples[i], angles[l]);
      CHECK(cnn_row_equals(batch, row, tile_channels(render(turned, rcfg))));
      CHECK(tcn_row_equals(batch, row, encode(turned)));
    }
  }
  // Label 0 is the sketch itself.
  CHECK(tcn_row_equals(batch, 0, encode(samples[0])));
}

TEST_CASE("deformation batches pair each sketch with its warped twin") {
  const RenderConfig rcfg{16, 0};
  const auto samples = synth_data(4, 8);
  const PretextTask task = parse_task("HC");
  const PretextBatch batch = gen_pretext_batch(task, samples, rcfg);

  REQUIRE(batch.labels.size() == 16);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(batch.labels[2 * i] == 0);
    CHECK(batch.labels[2 * i + 1] == 1);
    CHECK(cnn_row_equals(batch, 2 * i, tile_channels(render(samples[i], rcfg))));
    CHECK(tcn_row_equals(batch, 2 * i, encode(samples[i])));
    const PointSeq warped = apply_deform(task.spec, samples[i]);
    CHECK(cnn_row_equals(batch, 2 * i + 1, tile_channels(render(warped, rcfg))));
    CHECK(tcn_row_equals(batch, 2 * i + 1, encode(warped)));
  }

  // Pure function: a second call reproduces the batch bit for bit.
  const PretextBatch again = gen_pretext_batch(task, samples, rcfg);
  CHECK(batch.cnn.data == again.cnn.data);
  CHECK(batch.tcn.data == again.tcn.data);
  CHECK(batch.labels == again.labels);

  CHECK_THROWS_AS(gen_pretext_batch(task, {}, rcfg), ValidationError);
}

TEST_CASE("batch loss equals a scalar double-precision cross entropy") {
  Rng rng = make_rng(9, "pipeline/loss");
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t N = 3 + rng() % 5, L = 2 + rng() % 4;
    Tensor<float> logits({N, L});
    for (auto& v : logits.data) v = static_cast<float>(u(rng));
    std::vector<int> labels;
    for (std::size_t i = 0; i < N; ++i) labels.push_back(static_cast<int>(rng() % L));

    double want = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      double mx = logits.at2(n, 0);
      for (std::size_t l = 1; l < L; ++l) mx = std::max(mx, double(logits.at2(n, l)));
      double z = 0.0;
      for (std::size_t l = 0; l < L; ++l) z += std::exp(double(logits.at2(n, l)) - mx);
      want += std::log(z) + mx - double(logits.at2(n, labels[n]));
    }
    want /= static_cast<double>(N);
    CHECK(softmax_xent(logits, labels).loss == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("module fusion blends the branch features") {
  FeatureVector cnn_feat{{1.0f, 3.0f}, "cnn", "R"};
  FeatureVector tcn_feat{{3.0f, 1.0f}, "tcn", "R"};

  const FeatureVector mid = fuse_module(cnn_feat, tcn_feat, 0.5);
  CHECK(mid.values == std::vector<float>({2.0f, 2.0f}));
  CHECK(mid.source == "fused");
  CHECK(mid.module == "R");

  CHECK(fuse_module(cnn_feat, tcn_feat, 1.0).values == cnn_feat.values);
  CHECK(fuse_module(cnn_feat, tcn_feat, 0.0).values == tcn_feat.values);

  FeatureVector three{{1.0f, 2.0f, 3.0f}, "tcn", "R"};
  CHECK_THROWS_AS(fuse_module(cnn_feat, three, 0.5), ValidationError);
  CHECK_THROWS_AS(fuse_module(cnn_feat, tcn_feat, -0.1), ValidationError);
  CHECK_THROWS_AS(fuse_module(cnn_feat, tcn_feat, 1.1), ValidationError);
}

TEST_CASE("fusion weight defaults and validation") {
  const FusionWeights w = default_fusion(2);
  CHECK(w.lambda_r == doctest::Approx(1.0 / 3.0));
  REQUIRE(w.lambda_d.size() == 2);
  CHECK(w.lambda_d[0] == doctest::Approx(1.0 / 3.0));
  CHECK(w.mu_r == 0.5);
  CHECK(w.mu_d == std::vector<double>({0.5, 0.5}));
  CHECK_NOTHROW(validate_fusion(w, 2));

  CHECK_THROWS_AS(validate_fusion(w, 3), ValidationError);
  FusionWeights bad = default_fusion(2);
  bad.lambda_d[1] = std::nan("");
  CHECK_THROWS_AS(validate_fusion(bad, 2), ValidationError);
  bad = default_fusion(2);
  bad.mu_d[0] = 1.5;
  CHECK_THROWS_AS(validate_fusion(bad, 2), ValidationError);
  bad = default_fusion(2);
  bad.mu_r = -0.01;
  CHECK_THROWS_AS(validate_fusion(bad, 2), ValidationError);
}

TEST_CASE("one-hot fusion weights isolate a single branch") {
  const auto nets = tiny_nets();
  const RenderConfig rcfg{16, 0};
  const auto samples = synth_data(6, 5);
  ModuleBank bank = init_bank(parse_task_list("R,HC"), nets, 31);
  prepare_for_extraction(bank);

  FusionWeights w = default_fusion(1);
  w.lambda_r = 1.0;
  w.lambda_d = {0.0};
  w.mu_r = 1.0;
  const Tensor<float> fused = fuse_bank_features(bank, w, samples, rcfg);
  const Tensor<float> cnn_only = extract_batch(bank.rotation.cnn, batch_cnn_inputs(samples, rcfg));
  REQUIRE(fused.shape == cnn_only.shape);
  for (std::size_t i = 0; i < fused.numel(); ++i) CHECK(fused.data[i] == cnn_only.data[i]);

  w.mu_r = 0.0;
  const Tensor<float> tcn_only = extract_batch(bank.rotation.tcn, batch_tcn_inputs(samples));
  const Tensor<float> fused_t = fuse_bank_features(bank, w, samples, rcfg);
  for (std::size_t i = 0; i < fused_t.numel(); ++i) CHECK(fused_t.data[i] == tcn_only.data[i]);

  // All-zero weights collapse the representation to the origin.
  w.lambda_r = 0.0;
  const Tensor<float> zero = fuse_bank_features(bank, w, samples, rcfg);
  for (float v : zero.data) CHECK(v == 0.0f);
}

TEST_CASE("uniform fusion averages the module features") {
  const auto nets = tiny_nets();
  const RenderConfig rcfg{16, 0};
  const auto samples = synth_data(8, 4);
  ModuleBank bank = init_bank(parse_task_list("R,HC,VC"), nets, 32);
  prepare_for_extraction(bank);

  const FusionWeights w = default_fusion(2);
  const Tensor<float> fused = fuse_bank_features(bank, w, samples, rcfg);

  const Tensor<float> fr = module_feats(bank.rotation, 0.5, samples, rcfg);
  const Tensor<float> f0 = module_feats(bank.deforms[0], 0.5, samples, rcfg);
  const Tensor<float> f1 = module_feats(bank.deforms[1], 0.5, samples, rcfg);
  for (std::size_t i = 0; i < fused.numel(); ++i) {
    const double mean = (double(fr.data[i]) + f0.data[i] + f1.data[i]) / 3.0;
    CHECK(fused.data[i] == doctest::Approx(mean).epsilon(1e-5));
  }

  CHECK_THROWS_AS(fuse_bank_features(bank, w, {}, rcfg), ValidationError);

  // Single-sample convenience agrees with the batched row.
  const FeatureVector one = fuse_bank(bank, w, samples[0], rcfg);
  REQUIRE(one.values.size() == bank.feature_dim);
  for (std::size_t i = 0; i < one.values.size(); ++i) CHECK(one.values[i] == fused.data[i]);
}

TEST_CASE("doubling every lambda rescales features without reordering retrieval") {
  const auto nets = tiny_nets();
  const RenderConfig rcfg{16, 0};
  const auto samples = synth_data(12, 6);
  ModuleBank bank = init_bank(parse_task_list("R,HC"), nets, 33);
  prepare_for_extraction(bank);

  FusionWeights w = default_fusion(1);
  FusionWeights w2 = w;
  w2.lambda_r *= 2.0;
  for (auto& l : w2.lambda_d) l *= 2.0;

  const Tensor<float> f1 = fuse_bank_features(bank, w, samples, rcfg);
  const Tensor<float> f2 = fuse_bank_features(bank, w2, samples, rcfg);
  Tensor<float> gallery1(f1), gallery2(f2);
  for (std::size_t q = 0; q < samples.size(); ++q) {
    CHECK(rank_gallery(&f1.data[q * bank.feature_dim], gallery1) ==
          rank_gallery(&f2.data[q * bank.feature_dim], gallery2));
  }
}

TEST_CASE("a zero-lambda module drops out of the fused features exactly") {
  const auto nets = tiny_nets();
  const RenderConfig rcfg{16, 0};
  const auto samples = synth_data(14, 5);

  ModuleBank wide = init_bank(parse_task_list("R,HC,VC"), nets, 40);
  ModuleBank narrow = init_bank(parse_task_list("R,HC"), nets, 40);
  prepare_for_extraction(wide);
  prepare_for_extraction(narrow);

  FusionWeights ww = default_fusion(2);
  ww.lambda_r = 0.4;
  ww.lambda_d = {0.6, 0.0};  // VC silenced
  FusionWeights wn = default_fusion(1);
  wn.lambda_r = 0.4;
  wn.lambda_d = {0.6};

  const Tensor<float> fw = fuse_bank_features(wide, ww, samples, rcfg);
  const Tensor<float> fn = fuse_bank_features(narrow, wn, samples, rcfg);
  REQUIRE(fw.shape == fn.shape);
  for (std::size_t i = 0; i < fw.numel(); ++i) CHECK(fw.data[i] == fn.data[i]);
}

TEST_CASE("bank construction guards") {
  const auto nets = tiny_nets();
  CHECK_THROWS_AS(init_bank({}, nets, 1), ValidationError);
  CHECK_THROWS_AS(init_bank({parse_task("HC")}, nets, 1), ValidationError);
  CHECK_THROWS_AS(init_bank({rotation_task(), rotation_task()}, nets, 1), ValidationError);

  ExtractorConfigs mismatched = nets;
  mismatched.cnn.feature_dim = 16;
  CHECK_THROWS_AS(init_bank({rotation_task()}, mismatched, 1), ValidationError);
}

TEST_CASE("training is deterministic and restores the best epoch") {
  const auto nets = tiny_nets();
  const TrainConfig cfg = tiny_train(50);
  const auto train = synth_data(20, 12);
  const auto val = synth_data(21, 6);
  const PretextTask task = parse_task("HC");

  TrainedModule a = train_module(task, Branch::Tcn, train, val, nets, cfg);
  TrainedModule b = train_module(task, Branch::Tcn, train, val, nets, cfg);
  CHECK(params_equal(a.net, b.net));
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  CHECK(a.history.best_epoch == b.history.best_epoch);
  CHECK(a.history.best_val_acc == b.history.best_val_acc);

  REQUIRE(!a.history.epochs.empty());
  CHECK(a.history.best_epoch < a.history.epochs.size());
  CHECK(a.history.best_val_acc ==
        a.history.epochs[a.history.best_epoch].val_acc);
  CHECK(a.net.mode() == NetMode::Eval);

  CHECK_THROWS_AS(train_module(task, Branch::Tcn, {}, val, nets, cfg), ValidationError);
  CHECK_THROWS_AS(train_module(task, Branch::Tcn, train, {}, nets, cfg), ValidationError);
  TrainConfig zero = cfg;
  zero.epochs = 0;
  CHECK_THROWS_AS(train_module(task, Branch::Tcn, train, val, nets, zero), ValidationError);
  TrainConfig wrong_side = cfg;
  wrong_side.render.side = 32;
  CHECK_THROWS_AS(train_module(task, Branch::Cnn, train, val, nets, wrong_side),
                  ValidationError);
}

TEST_CASE("bank training does not depend on module order") {
  const auto nets = tiny_nets();
  const TrainConfig cfg = tiny_train(60);
  const auto train = synth_data(22, 10);
  const auto val = synth_data(23, 5);

  ModuleBank ab = train_bank(parse_task_list("R,HC,VC"), train, val, nets, cfg);
  ModuleBank ba = train_bank(parse_task_list("R,VC,HC"), train, val, nets, cfg);

  REQUIRE(ab.deforms.size() == 2);
  REQUIRE(ba.deforms.size() == 2);
  CHECK(ab.deforms[0].task.tag() == "HC");
  CHECK(ba.deforms[1].task.tag() == "HC");
  CHECK(params_equal(ab.deforms[0].cnn, ba.deforms[1].cnn));
  CHECK(params_equal(ab.deforms[0].tcn, ba.deforms[1].tcn));
  CHECK(params_equal(ab.rotation.cnn, ba.rotation.cnn));
}

TEST_CASE("bank save and load round-trip") {
  const auto dir = scratch_dir("bank");
  const auto nets = tiny_nets();
  const RenderConfig rcfg{16, 0};
  const auto samples = synth_data(25, 4);

  ModuleBank bank = init_bank(parse_task_list("R,HC", 0.3), nets, 44);
  FusionWeights w = default_fusion(1);
  w.lambda_r = 0.25;
  w.lambda_d = {0.75};
  w.mu_r = 0.3;
  w.mu_d = {0.8};
  save_bank(bank, w, 99, dir);

  FusionWeights got_w;
  std::uint64_t got_hash = 0;
  ModuleBank loaded = load_bank(dir, &got_w, &got_hash);
  CHECK(got_hash == 99);
  CHECK(loaded.seed == 44);
  CHECK(loaded.feature_dim == 8);
  CHECK(got_w.lambda_r == 0.25);
  CHECK(got_w.lambda_d == std::vector<double>({0.75}));
  CHECK(got_w.mu_r == 0.3);
  CHECK(got_w.mu_d == std::vector<double>({0.8}));

  REQUIRE(loaded.deforms.size() == 1);
  CHECK(loaded.deforms[0].task.tag() == "HC");
  CHECK(loaded.deforms[0].task.spec.x_axis.at(0).eta == 0.3);
  CHECK(params_equal(bank.rotation.cnn, loaded.rotation.cnn));
  CHECK(params_equal(bank.rotation.tcn, loaded.rotation.tcn));
  CHECK(params_equal(bank.deforms[0].cnn, loaded.deforms[0].cnn));

  prepare_for_extraction(bank);
  prepare_for_extraction(loaded);
  const Tensor<float> fa = fuse_bank_features(bank, w, samples, rcfg);
  const Tensor<float> fb = fuse_bank_features(loaded, w, samples, rcfg);
  CHECK(fa.data == fb.data);

  CHECK_THROWS_AS(load_bank(scratch_dir("no_bank")), DataError);
}

}  // TEST_SUITE

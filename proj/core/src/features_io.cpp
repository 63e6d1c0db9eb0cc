#include "skssl/features_io.hpp"

#include "skssl/binio.hpp"

namespace skssl {

namespace {
constexpr char kMagic[4] = {'S', 'K', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_features(const FeatureFile& ff, const std::filesystem::path& path) {
  validate_feature_set(ff.features);
  auto os = open_out(path.string());
  os.write(kMagic, 4);
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint64_t>(os, ff.config_hash);
  write_le<std::uint64_t>(os, ff.seed);
  write_str(os, ff.tag);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ff.features.rows.dim(0)));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ff.features.rows.dim(1)));
  write_le_array(os, ff.features.labels.data(), ff.features.labels.size());
  write_le_array(os, ff.features.rows.ptr(), ff.features.rows.numel());
  if (!os) throw DataError("short write to " + path.string());
}

FeatureFile read_features(const std::filesystem::path& path, std::uint64_t expected_hash) {
  auto is = open_in(path.string());
  expect_magic(is, kMagic, "feature");
  const auto version = read_le<std::uint32_t>(is, "feature version");
  if (version != kVersion) {
    throw DataError("unsupported feature file version " + std::to_string(version));
  }
  FeatureFile ff;
  ff.config_hash = read_le<std::uint64_t>(is, "feature config hash");
  if (expected_hash != 0 && ff.config_hash != expected_hash) {
    throw DataError("feature file " + path.string() +
                    " was produced under a different config (hash mismatch)");
  }
  ff.seed = read_le<std::uint64_t>(is, "feature seed");
  ff.tag = read_str(is, "feature tag");
  const auto rows = read_le<std::uint32_t>(is, "feature row count");
  const auto dim = read_le<std::uint32_t>(is, "feature dim");
  if (rows == 0 || dim == 0) throw DataError("feature file with empty matrix");
  ff.features.labels.resize(rows);
  read_le_array(is, ff.features.labels.data(), rows, "feature labels");
  ff.features.rows = Tensor<float>({rows, dim});
  read_le_array(is, ff.features.rows.data.data(), ff.features.rows.numel(), "feature matrix");
  char extra;
  if (is.read(&extra, 1), is.gcount() != 0) {
    throw DataError("trailing bytes in feature file " + path.string());
  }
  validate_feature_set(ff.features);
  return ff;
}

}  // namespace skssl

#include "skssl/pack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "skssl/binio.hpp"
#include "skssl/error.hpp"
#include "skssl/rng.hpp"

namespace skssl {

std::string DatasetManifest::category_name(std::uint16_t id) const {
  for (const auto& [name, cid] : categories)
    if (cid == id) return name;
  throw DataError("unknown category id " + std::to_string(id));
}

std::uint64_t write_pack(const std::string& path,
                         const std::vector<EncodedSeq>& samples,
                         const std::vector<std::string>& categories) {
  if (samples.empty()) throw ValidationError("write_pack: no samples");
  if (categories.size() > 0xffff)
    throw ValidationError("write_pack: too many categories");

  auto os = open_out(path);
  os.write(kPackMagic, 4);
  write_le<std::uint32_t>(os, kPackVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(samples.size()));
  write_le<std::uint16_t>(os, static_cast<std::uint16_t>(categories.size()));
  for (const auto& name : categories) write_str(os, name);

  const std::uint64_t sample_offset = static_cast<std::uint64_t>(os.tellp());
  for (const auto& s : samples) {
    if (s.category_id < 0 ||
        s.category_id >= static_cast<int>(categories.size()))
      throw ValidationError("write_pack: sample category id out of range");
    write_le<std::uint16_t>(os, static_cast<std::uint16_t>(s.category_id));
    write_le<std::uint8_t>(os, s.valid_len);
    write_le_array(os, s.rows.data(), s.rows.size());
  }
  if (!os) throw DataError("write_pack: I/O failure on " + path);
  return sample_offset;
}

PackContents read_pack(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, kPackMagic, "pack");
  const auto version = read_le<std::uint32_t>(is, "pack version");
  if (version != kPackVersion)
    throw DataError("pack version mismatch: got " + std::to_string(version) +
                    ", expected " + std::to_string(kPackVersion));
  const auto count = read_le<std::uint32_t>(is, "pack sample count");
  const auto n_cat = read_le<std::uint16_t>(is, "pack category count");

  PackContents pc;
  pc.categories.reserve(n_cat);
  for (std::uint16_t i = 0; i < n_cat; ++i)
    pc.categories.push_back(read_str(is, "pack category name"));
  pc.sample_offset = static_cast<std::uint64_t>(is.tellg());

  pc.samples.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EncodedSeq& s = pc.samples[i];
    s.category_id = read_le<std::uint16_t>(is, "sample category id");
    if (s.category_id >= n_cat)
      throw DataError("pack sample references unknown category id");
    s.valid_len = read_le<std::uint8_t>(is, "sample valid_len");
    if (s.valid_len > kSeqRows) throw DataError("sample valid_len out of range");
    read_le_array(is, s.rows.data(), s.rows.size(), "sample rows");
  }
  return pc;
}

std::map<std::string, std::vector<std::size_t>> assign_splits(
    const std::vector<int>& category_ids, std::uint16_t category_count,
    const SplitRatios& ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.gallery + ratios.query;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1");

  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& name : split_names()) out[name];

  for (std::uint16_t cat = 0; cat < category_count; ++cat) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < category_ids.size(); ++i)
      if (category_ids[i] == cat) idx.push_back(i);
    auto rng = make_rng(seed, "split/" + std::to_string(cat));
    std::shuffle(idx.begin(), idx.end(), rng);

    const std::size_t n = idx.size();
    const std::size_t n_train = static_cast<std::size_t>(std::floor(ratios.train * n));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(ratios.val * n));
    const std::size_t n_gallery = static_cast<std::size_t>(std::floor(ratios.gallery * n));
    std::size_t cut = 0;
    auto take = [&](const std::string& name, std::size_t k) {
      for (std::size_t i = 0; i < k && cut < n; ++i, ++cut)
        out[name].push_back(idx[cut]);
    };
    take("train", n_train);
    take("val", n_val);
    take("gallery", n_gallery);
    take("query", n - cut);
  }
  for (auto& [name, idx] : out) std::sort(idx.begin(), idx.end());
  return out;
}

void write_manifest(const std::string& path, const DatasetManifest& m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["ratios"] = {{"train", m.ratios.train},
                 {"val", m.ratios.val},
                 {"gallery", m.ratios.gallery},
                 {"query", m.ratios.query}};
  j["categories"] = m.categories;
  nlohmann::json splits;
  for (const auto& [name, info] : m.splits) {
    splits[name] = {{"file", info.file},
                    {"count", info.count},
                    {"sample_offset", info.sample_offset},
                    {"per_category", info.per_category}};
  }
  j["splits"] = splits;
  j["config_hash"] = m.config_hash;

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write manifest: " + path);
  os << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read manifest: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed manifest " + path + ": " + e.what());
  }
  DatasetManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.ratios.train = j.at("ratios").at("train").get<double>();
  m.ratios.val = j.at("ratios").at("val").get<double>();
  m.ratios.gallery = j.at("ratios").at("gallery").get<double>();
  m.ratios.query = j.at("ratios").at("query").get<double>();
  m.categories = j.at("categories").get<std::map<std::string, std::uint16_t>>();
  for (const auto& [name, inf] : j.at("splits").items()) {
    SplitInfo info;
    info.file = inf.at("file").get<std::string>();
    info.count = inf.at("count").get<std::uint32_t>();
    info.sample_offset = inf.at("sample_offset").get<std::uint64_t>();
    info.per_category =
        inf.at("per_category").get<std::map<std::string, std::uint32_t>>();
    m.splits[name] = info;
  }
  m.config_hash = j.value("config_hash", "");
  return m;
}

}  // namespace skssl

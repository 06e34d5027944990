// rescore/checkpoint.cc

// Copyright 2026  The rescore Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rescore/training.h"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written as raw little-endian doubles");

namespace rescore {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'R', 'S', 'C', 'R'};

template <typename T>
void put_raw(std::string &out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_raw(const std::string &in, size_t off) {
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  return v;
}

std::string hash_to_hex(uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

json config_to_json(const LmConfig &c) {
  json j;
  j["vocab_size"] = c.vocab_size;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["normalized"] = c.normalized;
  j["placement"] = to_string(c.placement);
  j["encoder"] = to_string(c.encoder);
  j["context_dim"] = c.context_dim;
  j["attn_dim"] = c.attn_dim;
  j["frame_dim"] = c.frame_dim;
  return j;
}

LmConfig config_from_json(const json &j) {
  LmConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.normalized = j.at("normalized").get<bool>();
  c.placement = placement_from_string(j.at("placement").get<std::string>());
  c.encoder = encoder_from_string(j.at("encoder").get<std::string>());
  c.context_dim = j.at("context_dim").get<int>();
  c.attn_dim = j.at("attn_dim").get<int>();
  c.frame_dim = j.at("frame_dim").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const RescoreModel &model, const std::string &path,
                     const CheckpointMeta &meta) {
  RESCORE_CHECK(model.defined(), "cannot save an undefined model");
  std::vector<NamedTensor> params = model.named_params();

  json header;
  header["config"] = config_to_json(model.config());
  header["vocab_hash"] = hash_to_hex(model.vocab_hash());
  header["meta"] = {{"epoch", meta.epoch},
                    {"dev_metric", meta.dev_metric},
                    {"phase", meta.phase}};
  json tensors = json::array();
  int64_t offset = 0;
  for (const NamedTensor &np : params) {
    json t;
    t["name"] = np.name;
    t["shape"] = np.tensor.shape();
    t["offset"] = offset;
    tensors.push_back(std::move(t));
    offset += np.tensor.numel() * 8;
  }
  header["tensors"] = std::move(tensors);
  std::string header_bytes = header.dump();

  std::string out;
  out.append(kMagic, 4);
  put_raw<uint32_t>(out, kCheckpointVersion);
  put_raw<uint64_t>(out, header_bytes.size());
  out += header_bytes;
  for (const NamedTensor &np : params) {
    const std::vector<double> &v = np.tensor.values();
    size_t pos = out.size();
    out.resize(pos + v.size() * 8);
    std::memcpy(&out[pos], v.data(), v.size() * 8);
  }
  put_raw<uint32_t>(out, crc32(out.data(), out.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  RESCORE_CHECK(f.good(), "cannot write checkpoint: ", path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  RESCORE_CHECK(f.good(), "short write on checkpoint: ", path);
}

RescoreModel load_checkpoint(const std::string &path, CheckpointMeta *meta) {
  std::ifstream f(path, std::ios::binary);
  RESCORE_CHECK(f.good(), "cannot open checkpoint: ", path);
  std::ostringstream buf;
  buf << f.rdbuf();
  std::string in = buf.str();

  RESCORE_CHECK(in.size() >= 20, "corrupt checkpoint (truncated): ", path);
  RESCORE_CHECK(std::memcmp(in.data(), kMagic, 4) == 0,
                "not a checkpoint file (bad magic): ", path);
  uint32_t version = get_raw<uint32_t>(in, 4);
  RESCORE_CHECK(version == kCheckpointVersion, "checkpoint version ", version,
                " not supported (this build reads version ",
                kCheckpointVersion, "): ", path);
  uint64_t header_len = get_raw<uint64_t>(in, 8);
  RESCORE_CHECK(16 + header_len + 4 <= in.size(),
                "corrupt checkpoint (truncated header): ", path);

  uint32_t stored_crc = get_raw<uint32_t>(in, in.size() - 4);
  uint32_t actual_crc = crc32(in.data(), in.size() - 4);
  RESCORE_CHECK(stored_crc == actual_crc,
                "corrupt checkpoint (checksum mismatch): ", path);

  json header;
  try {
    header = json::parse(in.substr(16, header_len));
  } catch (const std::exception &e) {
    throw Error(strcat_all("corrupt checkpoint (bad header): ", path, ": ",
                           e.what()));
  }
  LmConfig cfg = config_from_json(header.at("config"));
  uint64_t vocab_hash =
      std::stoull(header.at("vocab_hash").get<std::string>(), nullptr, 16);
  if (meta) {
    const json &m = header.at("meta");
    meta->epoch = m.at("epoch").get<int>();
    meta->dev_metric = m.at("dev_metric").get<double>();
    meta->phase = m.at("phase").get<std::string>();
  }

  RescoreModel model = RescoreModel::zero_init(cfg, vocab_hash);
  std::vector<NamedTensor> params = model.named_params();
  const json &tensors = header.at("tensors");
  RESCORE_CHECK(tensors.size() == params.size(),
                "corrupt checkpoint (tensor count ", tensors.size(),
                ", model expects ", params.size(), "): ", path);

  const size_t payload_start = 16 + header_len;
  const size_t payload_len = in.size() - 4 - payload_start;
  int64_t expect = 0;
  for (const NamedTensor &np : params) expect += np.tensor.numel() * 8;
  RESCORE_CHECK(static_cast<int64_t>(payload_len) == expect,
                "corrupt checkpoint (payload ", payload_len, " bytes, expected ",
                expect, "): ", path);

  for (size_t i = 0; i < params.size(); ++i) {
    const json &t = tensors[i];
    RESCORE_CHECK(t.at("name").get<std::string>() == params[i].name,
                  "corrupt checkpoint (tensor ", i, " is '",
                  t.at("name").get<std::string>(), "', model expects '",
                  params[i].name, "'): ", path);
    std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    RESCORE_CHECK(shape == params[i].tensor.shape(), "corrupt checkpoint "
                  "(shape mismatch on '", params[i].name, "'): ", path);
    int64_t off = t.at("offset").get<int64_t>();
    int64_t bytes = params[i].tensor.numel() * 8;
    RESCORE_CHECK(off >= 0 && off + bytes <= static_cast<int64_t>(payload_len),
                  "corrupt checkpoint (offset out of range on '",
                  params[i].name, "'): ", path);
    std::memcpy(params[i].tensor.values().data(),
                in.data() + payload_start + off, static_cast<size_t>(bytes));
  }
  return model;
}

}  // namespace rescore

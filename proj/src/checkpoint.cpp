// Copyright 2026 The socprob Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Layout:
//   "SPRB" | u32 version | u32 header_len | header (key=value lines)
//   then per parameter tensor, in declaration order: the value tensor;
//   then per parameter tensor: Adam first moment, Adam second moment.
//   Each tensor: u32 rank | u32 dims[rank] | f32 values. All little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "socprob/error.hpp"
#include "socprob/training.hpp"

namespace socprob::train
{

namespace
{

constexpr char kMagic[4] = {'S', 'P', 'R', 'B'};

void put_u32(std::string & buf, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
}

void put_tensor(std::string & buf, const Tensor & t)
{
  put_u32(buf, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) {
    put_u32(buf, static_cast<std::uint32_t>(d));
  }
  for (double v : t.data()) {
    put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

class Reader
{
public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void read(void * dst, std::size_t n)
  {
    if (pos_ + n > bytes_.size()) {
      throw IoError("checkpoint truncated at byte " + std::to_string(bytes_.size()));
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::uint32_t u32()
  {
    unsigned char b[4];
    read(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  void tensor(Tensor & expected, const std::string & name)
  {
    const std::uint32_t rank = u32();
    Shape shape(rank);
    for (auto & d : shape) {
      d = u32();
    }
    if (shape != expected.shape()) {
      throw FormatError(
        "checkpoint tensor " + name + " has shape " + shape_to_string(shape) + ", expected " +
        shape_to_string(expected.shape()));
    }
    for (auto & v : expected.data()) {
      v = static_cast<double>(std::bit_cast<float>(u32()));
    }
  }

  bool at_end() const { return pos_ == bytes_.size(); }

private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

void round_tensor(Tensor & t)
{
  for (auto & v : t.data()) {
    v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace

void round_to_storage_precision(Checkpoint & ckpt)
{
  ckpt.params.for_each([](const std::string &, Tensor & t) { round_tensor(t); });
  for (auto & a : ckpt.adam) {
    round_tensor(a.first_moment);
    round_tensor(a.second_moment);
  }
}

void save_checkpoint(const std::string & path, const Checkpoint & ckpt)
{
  const auto params = nn::parameter_list(ckpt.params);
  if (ckpt.adam.size() != params.size()) {
    throw ArgumentError("save_checkpoint: Adam state count does not match parameter count");
  }
  std::string header;
  for (const auto & [k, v] : ckpt.config.to_key_values()) {
    header += k + "=" + v + "\n";
  }
  header += "epoch=" + std::to_string(ckpt.epoch) + "\n";
  std::string steps;
  for (std::size_t i = 0; i < ckpt.adam.size(); ++i) {
    steps += (i ? "," : "") + std::to_string(ckpt.adam[i].step_count);
  }
  header += "adam_steps=" + steps + "\n";
  header += "rng_state=" + ckpt.rng_state + "\n";

  std::string buf(kMagic, 4);
  put_u32(buf, ckpt.version);
  put_u32(buf, static_cast<std::uint32_t>(header.size()));
  buf += header;
  for (const Tensor * t : params) {
    put_tensor(buf, *t);
  }
  for (const auto & a : ckpt.adam) {
    put_tensor(buf, a.first_moment);
    put_tensor(buf, a.second_moment);
  }

  // Write-then-rename.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
      throw IoError("write failed for " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot move checkpoint into place at " + path + ": " + ec.message());
  }
}

Checkpoint load_checkpoint(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path + " is not a checkpoint (bad magic)");
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != Checkpoint::kVersion) {
    throw VersionError(
      "checkpoint version " + std::to_string(ckpt.version) + " is not supported (expected " +
      std::to_string(Checkpoint::kVersion) + ")");
  }
  const std::uint32_t header_len = r.u32();
  std::string header(header_len, '\0');
  r.read(header.data(), header_len);

  std::vector<std::uint64_t> adam_steps;
  bool have_epoch = false;
  std::istringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("checkpoint header line without '='");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "epoch") {
        ckpt.epoch = std::stoull(value);
        have_epoch = true;
      } else if (key == "adam_steps") {
        std::istringstream vs(value);
        std::string item;
        while (std::getline(vs, item, ',')) {
          adam_steps.push_back(std::stoull(item));
        }
      } else if (key == "rng_state") {
        ckpt.rng_state = value;
      } else {
        ckpt.config.set(key, value);
      }
    } catch (const ConfigError & e) {
      throw FormatError(std::string("checkpoint header: ") + e.what());
    } catch (const std::logic_error &) {
      throw FormatError("checkpoint header: bad value for " + key);
    }
  }
  if (!have_epoch) {
    throw FormatError("checkpoint header lacks an epoch counter");
  }
  try {
    ckpt.config.validate();
  } catch (const ConfigError & e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  ckpt.params = nn::StackParams::zeros(ckpt.config.stack_config());
  const auto names = nn::parameter_names(ckpt.params);
  const auto params = nn::parameter_list(ckpt.params);
  if (adam_steps.size() != params.size()) {
    throw FormatError("checkpoint header: adam_steps count does not match the network");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    r.tensor(*params[i], names[i]);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    AdamState a = AdamState::for_param(*params[i]);
    r.tensor(a.first_moment, names[i] + ".m");
    r.tensor(a.second_moment, names[i] + ".v");
    a.step_count = adam_steps[i];
    ckpt.adam.push_back(std::move(a));
  }
  if (!r.at_end()) {
    throw FormatError("checkpoint has trailing bytes");
  }
  return ckpt;
}

void require_compatible(const Checkpoint & ckpt, const TrainConfig & cfg)
{
  const nn::StackConfig have = ckpt.params.config();
  const nn::StackConfig want = cfg.stack_config();
  if (!(have == want)) {
    throw DimensionError(
      "checkpoint network (" + std::to_string(have.width) + "x" + std::to_string(have.height) +
      ", " + std::to_string(have.channels.size()) + " layers) does not match the requested " +
      std::to_string(want.width) + "x" + std::to_string(want.height) + ", " +
      std::to_string(want.channels.size()) + " layers");
  }
}

}  // namespace socprob::train

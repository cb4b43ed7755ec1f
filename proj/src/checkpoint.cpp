/* Copyright 2026 The PIHOT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "pihot/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pihot/png_io.hpp"

namespace pihot {
namespace {

constexpr char kMagic[8] = {'P', 'I', 'H', 'O', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kMaxDims = 8;

class Writer {
 public:
  void bytes(const void* p, size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::vector<std::uint8_t> buf, std::string path) : buf_(std::move(buf)), path_(std::move(path)) {}

  const std::uint8_t* take(size_t n) {
    if (n > buf_.size() - pos_) fail("truncated");
    const auto* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos_ == buf_.size(); }
  [[noreturn]] void fail(const std::string& why) const {
    throw CheckpointError("corrupt checkpoint " + path_ + ": " + why);
  }

 private:
  std::vector<std::uint8_t> buf_;
  size_t pos_ = 0;
  std::string path_;
};

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : arrays) {
    if (n == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u64(ckpt.step);
  w.str(ckpt.config_text);
  w.u32(static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, t] : ckpt.arrays) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.ndim()));
    for (int d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.values()) w.f32(v);
  }
  io::write_file_atomic(path, w.data());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, path.string());

  if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) r.fail("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.step = r.u64();
  ckpt.config_text = r.str();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint32_t ndim = r.u32();
    if (ndim > kMaxDims) r.fail("array " + name + " has too many dimensions");
    Shape shape;
    size_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const std::uint32_t dim = r.u32();
      if (dim > (1u << 30)) r.fail("array " + name + " has an implausible dimension");
      shape.push_back(static_cast<int>(dim));
      numel *= dim;
      if (numel > (size_t{1} << 34)) r.fail("array " + name + " is implausibly large");
    }
    std::vector<float> data(numel);
    for (auto& v : data) v = r.f32();
    ckpt.arrays.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(data)));
  }
  if (!r.done()) r.fail("trailing bytes");
  return ckpt;
}

}  // namespace pihot

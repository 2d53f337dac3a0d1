// Copyright 2026 The mdd Authors.
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

#include "mdd/feature_archive.hpp"

#include <bit>
#include <cstring>
#include <sstream>

namespace mdd {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

namespace {

void PutU32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t GetU32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

FeatureArchiveWriter::FeatureArchiveWriter(const std::string& ark_path, const std::string& index_path)
    : ark_(ark_path, std::ios::binary | std::ios::trunc), index_(index_path, std::ios::binary | std::ios::trunc) {
  if (!ark_ || !index_) throw RuntimeError("cannot open feature archive for writing: " + ark_path);
  ark_.write(kFeatureMagic, 5);
  offset_ = 5;
}

FeatureArchiveWriter::~FeatureArchiveWriter() {
  if (!closed_) {
    try {
      Close();
    } catch (...) {
    }
  }
}

void FeatureArchiveWriter::Write(const std::string& utterance_id, const Matrix& frames) {
  if (utterance_id.empty() || utterance_id.find_first_of(" \t\n") != std::string::npos) {
    throw ValidationError("feature archive: invalid utterance id '" + utterance_id + "'");
  }
  index_ << utterance_id << ' ' << offset_ << '\n';
  PutU32(ark_, static_cast<std::uint32_t>(utterance_id.size()));
  ark_.write(utterance_id.data(), static_cast<std::streamsize>(utterance_id.size()));
  PutU32(ark_, static_cast<std::uint32_t>(frames.rows()));
  PutU32(ark_, static_cast<std::uint32_t>(frames.cols()));
  std::vector<float> buf(static_cast<std::size_t>(frames.size()));
  for (Eigen::Index i = 0; i < frames.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(frames.data()[i]);
  ark_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  offset_ += 12 + utterance_id.size() + buf.size() * sizeof(float);
  if (!ark_ || !index_) throw RuntimeError("feature archive write failed");
}

void FeatureArchiveWriter::Close() {
  closed_ = true;
  ark_.close();
  index_.close();
  if (ark_.fail() || index_.fail()) throw RuntimeError("feature archive close failed");
}

FeatureArchiveReader::FeatureArchiveReader(const std::string& ark_path, const std::string& index_path)
    : ark_path_(ark_path), ark_(ark_path, std::ios::binary) {
  if (!ark_) throw ValidationError("cannot open feature archive " + ark_path);
  char magic[5] = {};
  ark_.read(magic, 5);
  if (!ark_ || std::memcmp(magic, kFeatureMagic, 5) != 0) {
    throw ValidationError(ark_path + ": missing MDDF1 magic");
  }
  std::ifstream idx(index_path);
  if (!idx) throw ValidationError("cannot open feature index " + index_path);
  std::string line;
  int line_no = 0;
  while (std::getline(idx, line)) {
    ++line_no;
    auto f = SplitWhitespace(line);
    if (f.empty()) continue;
    if (f.size() != 2) throw ValidationError(index_path + ":" + std::to_string(line_no) + ": malformed index line");
    std::uint64_t off = std::stoull(f[1]);
    if (!offsets_.emplace(f[0], off).second) {
      throw ValidationError(index_path + ": duplicate id '" + f[0] + "'");
    }
    ids_.push_back(f[0]);
  }
}

Matrix FeatureArchiveReader::Read(const std::string& utterance_id) {
  auto it = offsets_.find(utterance_id);
  if (it == offsets_.end()) throw ValidationError("feature archive has no entry for '" + utterance_id + "'");
  ark_.clear();
  ark_.seekg(static_cast<std::streamoff>(it->second));
  std::uint32_t id_len = GetU32(ark_);
  std::string id(id_len, '\0');
  ark_.read(id.data(), id_len);
  if (!ark_ || id != utterance_id) throw ValidationError(ark_path_ + ": index offset does not point at '" + utterance_id + "'");
  std::uint32_t rows = GetU32(ark_);
  std::uint32_t cols = GetU32(ark_);
  std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
  ark_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!ark_) throw ValidationError(ark_path_ + ": truncated record for '" + utterance_id + "'");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < buf.size(); ++i) m.data()[i] = buf[i];
  return m;
}

}  // namespace mdd

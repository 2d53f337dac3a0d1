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

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mdd/fbank.hpp"

namespace mdd {

// Archive layout: the 5-byte magic "MDDF1", then one record per utterance:
//   u32 id_len | id bytes | u32 T | u32 D | T*D float32, row-major
// All integers and floats little-endian. The companion index is a text
// file of "utterance_id byte_offset" lines, offsets pointing at id_len.
inline constexpr char kFeatureMagic[] = "MDDF1";

class FeatureArchiveWriter {
 public:
  FeatureArchiveWriter(const std::string& ark_path, const std::string& index_path);
  ~FeatureArchiveWriter();
  FeatureArchiveWriter(const FeatureArchiveWriter&) = delete;
  FeatureArchiveWriter& operator=(const FeatureArchiveWriter&) = delete;

  void Write(const std::string& utterance_id, const Matrix& frames);
  void Close();

 private:
  std::ofstream ark_;
  std::ofstream index_;
  std::uint64_t offset_ = 0;
  bool closed_ = false;
};

class FeatureArchiveReader {
 public:
  FeatureArchiveReader(const std::string& ark_path, const std::string& index_path);

  const std::vector<std::string>& ids() const { return ids_; }
  bool Contains(const std::string& id) const { return offsets_.count(id) != 0; }
  Matrix Read(const std::string& utterance_id);

 private:
  std::string ark_path_;
  std::ifstream ark_;
  std::vector<std::string> ids_;
  std::map<std::string, std::uint64_t> offsets_;
};

}  // namespace mdd

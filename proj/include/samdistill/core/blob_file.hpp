// Copyright 2026 The samdistill Authors
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

#include <string>
#include <vector>

#include "json.hpp"
#include "samdistill/core/tensor.hpp"

namespace samdistill::core {

// Minimal binary container: an 8-byte magic, a JSON header, and a list of
// float64 tensors. All integers and doubles are encoded little-endian, so
// files are portable. Writes go through a temp file plus rename, so a crash
// never leaves a truncated file under the final name.
//
// Layout: magic[8] | u64 header_len | header bytes | u64 blob_count |
//         per blob: u64 rank, u64 dims[rank], f64 data[numel].
struct BlobFile {
  nlohmann::json header;
  std::vector<Tensor> blobs;
};

void write_blob_file(const std::string& path, const std::string& magic,
                     const BlobFile& file);

// Throws IoError on missing file, wrong magic, or truncation.
BlobFile read_blob_file(const std::string& path, const std::string& magic);

}  // namespace samdistill::core

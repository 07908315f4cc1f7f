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

#include "samdistill/core/blob_file.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>

namespace samdistill::core {

namespace {

void put_u64(std::FILE* f, uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
  if (std::fwrite(b, 1, 8, f) != 8) throw IoError("blob file: short write");
}

uint64_t get_u64(std::FILE* f) {
  uint8_t b[8];
  if (std::fread(b, 1, 8, f) != 8) throw IoError("blob file: truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::FILE* f, double d) { put_u64(f, std::bit_cast<uint64_t>(d)); }

double get_f64(std::FILE* f) { return std::bit_cast<double>(get_u64(f)); }

}  // namespace

void write_blob_file(const std::string& path, const std::string& magic,
                     const BlobFile& file) {
  if (magic.size() != 8) throw Error("blob file magic must be 8 bytes");
  std::string tmp = path + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + tmp);
    try {
      if (std::fwrite(magic.data(), 1, 8, f) != 8) {
        throw IoError("blob file: short write");
      }
      std::string header = file.header.dump();
      put_u64(f, header.size());
      if (!header.empty() &&
          std::fwrite(header.data(), 1, header.size(), f) != header.size()) {
        throw IoError("blob file: short write");
      }
      put_u64(f, file.blobs.size());
      for (const Tensor& t : file.blobs) {
        put_u64(f, static_cast<uint64_t>(t.rank()));
        for (int64_t d = 0; d < t.rank(); ++d)
          put_u64(f, static_cast<uint64_t>(t.dim(d)));
        for (int64_t i = 0; i < t.numel(); ++i) put_f64(f, t[i]);
      }
    } catch (...) {
      std::fclose(f);
      std::remove(tmp.c_str());
      throw;
    }
    if (std::fclose(f) != 0) {
      std::remove(tmp.c_str());
      throw IoError("cannot flush: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
  }
}

BlobFile read_blob_file(const std::string& path, const std::string& magic) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open: " + path);
  try {
    char got[8];
    if (std::fread(got, 1, 8, f) != 8 ||
        std::string(got, 8) != magic) {
      throw IoError("bad magic in " + path + " (expected " + magic + ")");
    }
    BlobFile out;
    uint64_t hlen = get_u64(f);
    if (hlen > (1ull << 30)) throw IoError("unreasonable header size in " + path);
    std::string header(hlen, '\0');
    if (hlen && std::fread(header.data(), 1, hlen, f) != hlen) {
      throw IoError("blob file: truncated header in " + path);
    }
    try {
      out.header = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed blob header in " + path + ": " + e.what());
    }
    uint64_t count = get_u64(f);
    if (count > (1ull << 24)) throw IoError("unreasonable blob count in " + path);
    out.blobs.reserve(count);
    for (uint64_t k = 0; k < count; ++k) {
      uint64_t rank = get_u64(f);
      if (rank > 8) throw IoError("unreasonable blob rank in " + path);
      Shape shape(rank);
      for (uint64_t d = 0; d < rank; ++d)
        shape[d] = static_cast<int64_t>(get_u64(f));
      Tensor t(shape);
      for (int64_t i = 0; i < t.numel(); ++i) t[i] = get_f64(f);
      out.blobs.push_back(std::move(t));
    }
    std::fclose(f);
    return out;
  } catch (...) {
    std::fclose(f);
    throw;
  }
}

}  // namespace samdistill::core

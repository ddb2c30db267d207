// Copyright 2026 The Remeasure Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "remeasure/registry.h"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <system_error>

#include "string_view_compat.h"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"
#include "remeasure/ingest.h"

namespace remeasure {
namespace {

namespace fs = std::filesystem;

bool ValidId(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return id != "." && id != "..";
}

absl::StatusOr<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Writes to a sibling temp file, then renames over the target.
absl::Status WriteFileAtomic(const fs::path& path, std::string_view data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::InternalError(absl::StrCat("cannot write ", tmp.string()));
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
      return absl::InternalError(absl::StrCat("cannot write ", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot rename ", tmp.string(), ": ", ec.message()));
  }
  return absl::OkStatus();
}

}  // namespace

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

absl::StatusOr<std::unique_ptr<DatasetRegistry>> DatasetRegistry::Open(
    fs::path root) {
  std::error_code ec;
  fs::create_directories(root / "blobs", ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create registry at ",
                                            root.string(), ": ", ec.message()));
  }
  return std::unique_ptr<DatasetRegistry>(new DatasetRegistry(std::move(root)));
}

absl::StatusOr<std::map<std::string, std::string>> DatasetRegistry::ReadIndex() {
  const fs::path path = root_ / "index.json";
  if (!fs::exists(path)) return std::map<std::string, std::string>{};
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  try {
    return nlohmann::json::parse(*text).get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat("corrupt registry index: ", e.what()));
  }
}

absl::Status DatasetRegistry::WriteIndex(
    const std::map<std::string, std::string>& index) {
  return WriteFileAtomic(root_ / "index.json", nlohmann::json(index).dump(2));
}

absl::StatusOr<std::string> DatasetRegistry::Put(std::string_view id,
                                                 const Dataset& dataset) {
  if (!ValidId(id)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dataset id '", Av(id), "' must be 1-128 characters of [A-Za-z0-9._-]"));
  }
  const std::string blob = DatasetToJson(dataset).dump();
  const std::string digest = Sha256Hex(blob);
  std::lock_guard<std::mutex> lock(mu_);
  const fs::path blob_path = root_ / "blobs" / (digest + ".json");
  if (!fs::exists(blob_path)) {
    if (absl::Status s = WriteFileAtomic(blob_path, blob); !s.ok()) return s;
  }
  absl::StatusOr<std::map<std::string, std::string>> index = ReadIndex();
  if (!index.ok()) return index.status();
  auto it = index->find(std::string(id));
  if (it == index->end() || it->second != digest) {
    (*index)[std::string(id)] = digest;
    if (absl::Status s = WriteIndex(*index); !s.ok()) return s;
  }
  return digest;
}

absl::StatusOr<std::string> DatasetRegistry::Digest(std::string_view id) {
  std::lock_guard<std::mutex> lock(mu_);
  absl::StatusOr<std::map<std::string, std::string>> index = ReadIndex();
  if (!index.ok()) return index.status();
  auto it = index->find(std::string(id));
  if (it == index->end()) {
    return absl::NotFoundError(absl::StrCat("unknown dataset '", Av(id), "'"));
  }
  return it->second;
}

absl::StatusOr<std::shared_ptr<const Dataset>> DatasetRegistry::Get(
    std::string_view id) {
  absl::StatusOr<std::string> digest = Digest(id);
  if (!digest.ok()) return digest.status();
  std::lock_guard<std::mutex> lock(mu_);
  auto cached = cache_.find(*digest);
  if (cached != cache_.end()) return cached->second;
  absl::StatusOr<std::string> blob =
      ReadFile(root_ / "blobs" / (*digest + ".json"));
  if (!blob.ok()) return blob.status();
  if (Sha256Hex(*blob) != *digest) {
    return absl::DataLossError(
        absl::StrCat("blob for '", Av(id), "' does not match its digest"));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(*blob);
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat("corrupt blob: ", e.what()));
  }
  absl::StatusOr<Dataset> ds = DatasetFromJson(j);
  if (!ds.ok()) return ds.status();
  auto shared = std::make_shared<const Dataset>(*std::move(ds));
  cache_[*digest] = shared;
  return shared;
}

std::vector<std::string> DatasetRegistry::List() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> ids;
  absl::StatusOr<std::map<std::string, std::string>> index = ReadIndex();
  if (!index.ok()) return ids;
  for (const auto& [id, digest] : *index) ids.push_back(id);
  return ids;
}

}  // namespace remeasure

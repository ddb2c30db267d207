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

// A directory of content-addressed dataset blobs.
//
//   <root>/index.json             {"<dataset id>": "<sha256 hex>", ...}
//   <root>/blobs/<sha256>.json    DatasetToJson, compactly dumped
//
// The digest is the SHA-256 of the blob bytes, so re-registering identical
// content yields the same digest and no new file.

#ifndef REMEASURE_REGISTRY_H_
#define REMEASURE_REGISTRY_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "remeasure/domain.h"

namespace remeasure {

std::string Sha256Hex(std::string_view data);

class DatasetRegistry {
 public:
  // Creates the directory layout when missing.
  static absl::StatusOr<std::unique_ptr<DatasetRegistry>> Open(
      std::filesystem::path root);

  // Stores the dataset and points `id` at it. Returns the digest.
  absl::StatusOr<std::string> Put(std::string_view id, const Dataset& dataset);
  // NotFound for unknown ids.
  absl::StatusOr<std::shared_ptr<const Dataset>> Get(std::string_view id);
  absl::StatusOr<std::string> Digest(std::string_view id);
  std::vector<std::string> List();

  const std::filesystem::path& root() const { return root_; }

 private:
  explicit DatasetRegistry(std::filesystem::path root)
      : root_(std::move(root)) {}

  absl::StatusOr<std::map<std::string, std::string>> ReadIndex();
  absl::Status WriteIndex(const std::map<std::string, std::string>& index);

  std::filesystem::path root_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Dataset>> cache_;
};

}  // namespace remeasure

#endif  // REMEASURE_REGISTRY_H_

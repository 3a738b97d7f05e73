/*
 * Copyright 2026 The fedsumm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedsumm/error.hpp"

namespace fedsumm {

enum class DataKind : std::uint8_t { raw, embedded };

inline std::string_view to_string(DataKind kind) { return kind == DataKind::raw ? "raw" : "embedded"; }

// Non-owning view of one labeled sample.
struct Sample {
  std::span<const float> features;
  std::uint32_t label;
};

// One device's labeled samples, stored as a row-major feature matrix plus a
// label column. Immutable after construction.
class ClientDataset {
 public:
  ClientDataset(std::string client_id, std::uint32_t num_classes, std::uint32_t dim, DataKind kind,
                std::vector<std::uint32_t> labels, std::vector<float> features)
      : client_id_(std::move(client_id)),
        num_classes_(num_classes),
        dim_(dim),
        kind_(kind),
        labels_(std::move(labels)),
        features_(std::move(features)) {
    detail::require(num_classes_ >= 1, "client '" + client_id_ + "': num_classes must be >= 1");
    detail::require(dim_ >= 1, "client '" + client_id_ + "': feature dimension must be >= 1");
    detail::require(!labels_.empty(), "client '" + client_id_ + "': dataset must contain at least one sample");
    detail::require(features_.size() == labels_.size() * dim_,
                    "client '" + client_id_ + "': feature buffer size does not match samples x dim");
    for (auto label : labels_) {
      if (label >= num_classes_) {
        throw ValidationError("client '" + client_id_ + "': label " + std::to_string(label) + " out of range [0, " +
                              std::to_string(num_classes_) + ")");
      }
    }
    for (float v : features_) {
      if (!std::isfinite(v)) throw ValidationError("client '" + client_id_ + "': non-finite feature value");
    }
  }

  const std::string& client_id() const noexcept { return client_id_; }
  std::uint32_t num_classes() const noexcept { return num_classes_; }
  std::uint32_t dim() const noexcept { return dim_; }
  DataKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  std::span<const float> features(std::size_t i) const { return {features_.data() + i * dim_, dim_}; }
  Sample sample(std::size_t i) const { return {features(i), labels_[i]}; }

  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  std::span<const float> feature_matrix() const noexcept { return features_; }

  std::vector<std::size_t> label_counts() const {
    std::vector<std::size_t> counts(num_classes_, 0);
    for (auto label : labels_) ++counts[label];
    return counts;
  }

  // Same samples, reinterpreted as a different kind (e.g. raw records read
  // from an FDSM stream).
  ClientDataset with_kind(DataKind kind) const {
    ClientDataset copy = *this;
    copy.kind_ = kind;
    return copy;
  }

  friend bool operator==(const ClientDataset&, const ClientDataset&) = default;

 private:
  std::string client_id_;
  std::uint32_t num_classes_;
  std::uint32_t dim_;
  DataKind kind_;
  std::vector<std::uint32_t> labels_;
  std::vector<float> features_;
};

}  // namespace fedsumm

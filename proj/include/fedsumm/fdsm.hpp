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

// FDSM: little-endian record stream for client datasets and summaries.
//
//   magic "FDSM" | version u16 (=1) | record type u8 | id length u16 | id bytes
//   type 0 (dataset):   C u32 | dim u32 | count u32 | count x (label u32, dim x f32)
//   type 1 (summary):   C u32 | H u32 | (C*H + C) x f32
//   type 2 (histogram): kind u8 | C u32 | dim u32 | bins u32 | lo f64 | hi f64
//                       | (C*dim*bins) x f32 if kind == conditional | C x f32
//
// A file is one or more records back to back.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <span>
#include <streambuf>
#include <string>
#include <variant>
#include <vector>

#include "fedsumm/dataset.hpp"
#include "fedsumm/error.hpp"
#include "fedsumm/summary.hpp"

namespace fedsumm::fdsm {

inline constexpr std::array<char, 4> kMagic{'F', 'D', 'S', 'M'};
inline constexpr std::uint16_t kVersion = 1;

enum class RecordType : std::uint8_t { dataset = 0, summary = 1, histogram = 2 };

using Record = std::variant<ClientDataset, DistributionSummary, HistogramSummary>;

inline std::size_t header_size(const std::string& client_id) { return 4 + 2 + 1 + 2 + client_id.size(); }

inline std::size_t serialized_size(const ClientDataset& ds) {
  return header_size(ds.client_id()) + 12 + ds.size() * (4 + 4 * static_cast<std::size_t>(ds.dim()));
}
inline std::size_t serialized_size(const DistributionSummary& s) {
  return header_size(s.client_id) + 8 + 4 * DistributionSummary::length(s.num_classes, s.embed_dim);
}
inline std::size_t serialized_size(const HistogramSummary& s) {
  return header_size(s.client_id) + 1 + 12 + 16 + 4 * s.element_count();
}

// Streams records to an std::ostream through a small staging buffer.
class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;
  ~Writer() { flush_noexcept(); }

  void write(const ClientDataset& ds) {
    header(RecordType::dataset, ds.client_id());
    u32(ds.num_classes());
    u32(ds.dim());
    u32(checked_u32(ds.size(), "sample count"));
    for (std::size_t i = 0; i < ds.size(); ++i) {
      u32(ds.label(i));
      for (float v : ds.features(i)) f32(v);
    }
    flush();
  }

  void write(const DistributionSummary& s) {
    detail::require(s.values.size() == DistributionSummary::length(s.num_classes, s.embed_dim),
                    "summary '" + s.client_id + "': values length is not C*H + C");
    header(RecordType::summary, s.client_id);
    u32(s.num_classes);
    u32(s.embed_dim);
    for (double v : s.values) f32(static_cast<float>(v));
    flush();
  }

  void write(const HistogramSummary& s) {
    header(RecordType::histogram, s.client_id);
    u8(static_cast<std::uint8_t>(s.kind));
    u32(s.num_classes);
    u32(s.dim);
    u32(s.bins);
    f64(s.lo);
    f64(s.hi);
    for (double v : s.conditional) f32(static_cast<float>(v));
    for (double v : s.label_distribution) f32(static_cast<float>(v));
    flush();
  }

  void write(const Record& r) {
    std::visit([this](const auto& x) { write(x); }, r);
  }

  std::size_t bytes_written() const noexcept { return written_; }

  void flush() {
    if (fill_ > 0) os_.write(buf_.data(), static_cast<std::streamsize>(fill_));
    fill_ = 0;
    if (!os_) throw std::runtime_error("FDSM: write failed");
  }

 private:
  static std::uint32_t checked_u32(std::size_t v, const char* what) {
    detail::require(v <= 0xffffffffULL, std::string("FDSM: ") + what + " exceeds u32");
    return static_cast<std::uint32_t>(v);
  }

  void header(RecordType type, const std::string& client_id) {
    detail::require(client_id.size() <= 0xffff, "FDSM: client_id longer than 65535 bytes");
    for (char c : kMagic) put(static_cast<std::uint8_t>(c));
    u16(kVersion);
    u8(static_cast<std::uint8_t>(type));
    u16(static_cast<std::uint16_t>(client_id.size()));
    for (char c : client_id) put(static_cast<std::uint8_t>(c));
  }

  void put(std::uint8_t b) {
    if (fill_ == buf_.size()) flush();
    buf_[fill_++] = static_cast<char>(b);
    ++written_;
  }
  void u8(std::uint8_t v) { put(v); }
  void u16(std::uint16_t v) {
    put(static_cast<std::uint8_t>(v));
    put(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) put(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) put(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void flush_noexcept() noexcept {
    try {
      flush();
    } catch (...) {
    }
  }

  std::ostream& os_;
  std::array<char, 1 << 16> buf_{};
  std::size_t fill_ = 0;
  std::size_t written_ = 0;
};

// Decodes a byte buffer holding one or more records. Dataset records are
// tagged with `dataset_kind` (the format does not carry it).
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes, DataKind dataset_kind = DataKind::embedded)
      : bytes_(bytes), kind_(dataset_kind) {}

  bool done() const noexcept { return pos_ >= bytes_.size(); }
  std::size_t offset() const noexcept { return pos_; }

  Record next() {
    const std::size_t start = pos_;
    need(4, "magic");
    if (std::memcmp(bytes_.data() + pos_, kMagic.data(), 4) != 0) throw FormatError("bad magic", start);
    pos_ += 4;
    const std::size_t version_at = pos_;
    const std::uint16_t version = u16("version");
    if (version != kVersion) {
      throw FormatError("unsupported version " + std::to_string(version), version_at);
    }
    const std::size_t type_at = pos_;
    const std::uint8_t type = u8("record type");
    const std::uint16_t id_len = u16("client_id length");
    need(id_len, "client_id");
    std::string id(reinterpret_cast<const char*>(bytes_.data() + pos_), id_len);
    pos_ += id_len;
    switch (static_cast<RecordType>(type)) {
      case RecordType::dataset: return read_dataset(std::move(id));
      case RecordType::summary: return read_summary(std::move(id));
      case RecordType::histogram: return read_histogram(std::move(id));
    }
    throw FormatError("unknown record type " + std::to_string(type), type_at);
  }

 private:
  ClientDataset read_dataset(std::string id) {
    const std::size_t c_at = pos_;
    const std::uint32_t num_classes = u32("num_classes");
    const std::uint32_t dim = u32("dim");
    const std::uint32_t count = u32("sample count");
    if (num_classes == 0) throw FormatError("num_classes is zero", c_at);
    if (dim == 0) throw FormatError("dim is zero", c_at + 4);
    if (count == 0) throw FormatError("dataset has no samples", c_at + 8);
    const std::size_t record_bytes = 4 + 4 * static_cast<std::size_t>(dim);
    if ((bytes_.size() - pos_) / record_bytes < count) {
      throw FormatError("truncated dataset: " + std::to_string(count) + " samples of dim " + std::to_string(dim) +
                            " do not fit in the remaining " + std::to_string(bytes_.size() - pos_) + " bytes",
                        pos_);
    }
    std::vector<std::uint32_t> labels(count);
    std::vector<float> features(static_cast<std::size_t>(count) * dim);
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::size_t at = pos_;
      labels[i] = u32("label");
      if (labels[i] >= num_classes) {
        throw FormatError("label " + std::to_string(labels[i]) + " out of range", at);
      }
      for (std::uint32_t d = 0; d < dim; ++d) features[static_cast<std::size_t>(i) * dim + d] = finite_f32();
    }
    return ClientDataset(std::move(id), num_classes, dim, kind_, std::move(labels), std::move(features));
  }

  DistributionSummary read_summary(std::string id) {
    const std::size_t c_at = pos_;
    DistributionSummary s;
    s.client_id = std::move(id);
    s.num_classes = u32("num_classes");
    s.embed_dim = u32("H");
    if (s.num_classes == 0 || s.embed_dim == 0) throw FormatError("summary with zero C or H", c_at);
    const std::size_t n = DistributionSummary::length(s.num_classes, s.embed_dim);
    need_array(n, "summary values");
    s.values.resize(n);
    for (auto& v : s.values) v = finite_f32();
    return s;
  }

  HistogramSummary read_histogram(std::string id) {
    const std::size_t kind_at = pos_;
    HistogramSummary s;
    s.client_id = std::move(id);
    const std::uint8_t kind = u8("histogram kind");
    if (kind > 1) throw FormatError("unknown histogram kind " + std::to_string(kind), kind_at);
    s.kind = static_cast<HistogramKind>(kind);
    s.num_classes = u32("num_classes");
    s.dim = u32("dim");
    s.bins = u32("bins");
    s.lo = f64("lo");
    s.hi = f64("hi");
    if (s.num_classes == 0) throw FormatError("histogram with zero classes", kind_at + 1);
    if (s.kind == HistogramKind::conditional) {
      if (s.dim == 0 || s.bins < 2) throw FormatError("conditional histogram needs dim >= 1 and bins >= 2", kind_at + 5);
      const std::size_t n = static_cast<std::size_t>(s.num_classes) * s.dim * s.bins;
      need_array(n, "conditional histogram");
      s.conditional.resize(n);
      for (auto& v : s.conditional) v = finite_f32();
    }
    need_array(s.num_classes, "label distribution");
    s.label_distribution.resize(s.num_classes);
    for (auto& v : s.label_distribution) v = finite_f32();
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated ") + what + " (need " + std::to_string(n) + " bytes, have " +
                            std::to_string(bytes_.size() - pos_) + ")",
                        pos_);
    }
  }
  void need_array(std::size_t count, const char* what) const {
    if ((bytes_.size() - pos_) / 4 < count) need(count * 4, what);
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  float finite_f32() {
    const std::size_t at = pos_;
    const float v = std::bit_cast<float>(u32("float value"));
    if (!std::isfinite(v)) throw FormatError("non-finite value", at);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  DataKind kind_;
  std::size_t pos_ = 0;
};

inline std::vector<Record> decode(std::span<const std::uint8_t> bytes, DataKind dataset_kind = DataKind::embedded) {
  Reader reader(bytes, dataset_kind);
  std::vector<Record> out;
  if (reader.done()) throw FormatError("empty input", 0);
  while (!reader.done()) out.push_back(reader.next());
  return out;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<Record> read_file(const std::filesystem::path& path, DataKind dataset_kind = DataKind::embedded) {
  const auto bytes = read_bytes(path);
  return decode(bytes, dataset_kind);
}

template <typename Range>
void write_file(const std::filesystem::path& path, const Range& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  Writer w(out);
  for (const auto& r : records) w.write(r);
  w.flush();
}

// Single embedded-dataset file, the interchange point with the offline
// embedding export tool.
inline void export_embedded_dataset(const std::filesystem::path& path, const ClientDataset& ds) {
  write_file(path, std::span<const ClientDataset>(&ds, 1));
}

inline ClientDataset import_embedded_dataset(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  Reader reader(bytes, DataKind::embedded);
  if (reader.done()) throw FormatError("empty input", 0);
  auto record = reader.next();
  if (!std::holds_alternative<ClientDataset>(record)) throw FormatError("record is not a dataset", 0);
  if (!reader.done()) throw FormatError("trailing bytes after dataset record", reader.offset());
  return std::get<ClientDataset>(std::move(record));
}

// Discards bytes while counting them; lets callers measure serialized sizes
// without buffering multi-hundred-megabyte records.
class CountingBuffer : public std::streambuf {
 public:
  std::size_t count() const noexcept { return count_; }

 protected:
  int_type overflow(int_type ch) override {
    if (!traits_type::eq_int_type(ch, traits_type::eof())) ++count_;
    return traits_type::not_eof(ch);
  }
  std::streamsize xsputn(const char*, std::streamsize n) override {
    count_ += static_cast<std::size_t>(n);
    return n;
  }

 private:
  std::size_t count_ = 0;
};

template <typename T>
std::size_t measure_bytes(const T& record) {
  CountingBuffer buf;
  std::ostream os(&buf);
  Writer w(os);
  w.write(record);
  w.flush();
  return buf.count();
}

}  // namespace fedsumm::fdsm

// Copyright 2026 The lcslab Authors
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

// LCSB container.
//
// Little-endian layout:
//
//   header   : magic "LCSB" | version u32 (=1) | count u64 | K u16 | C u16 | H u16 | W u16
//   per sample:
//     pixels : C*H*W float32, channel-major   (truth sidecar: H*W u16 class ids, C = 1)
//     split  : u8 (0 train, 1 val, 2 test)
//     group  : u32
//     labels : count u16, then per label row u16, col u16, class u16

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcslab/core/binary_io.hpp"
#include "lcslab/core/types.hpp"

namespace lcslab {

inline constexpr char kDatasetMagic[4] = {'L', 'C', 'S', 'B'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 4 + 4 + 8 + 4 * 2;

/// Ground-truth sidecar: one class raster per sample of a dataset.
struct TruthSet {
  std::uint16_t classes = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::vector<ClassMap> maps;
  std::vector<Sample> meta;  // image left empty; split/group/labels mirror the dataset

  friend bool operator==(const TruthSet&, const TruthSet&) = default;
};

namespace detail {

inline void write_header(io::ByteWriter& w, std::uint64_t count, std::uint16_t k,
                         std::uint16_t c, std::uint16_t h, std::uint16_t wd) {
  w.bytes(std::string_view(kDatasetMagic, 4));
  w.u32(kDatasetVersion);
  w.u64(count);
  w.u16(k);
  w.u16(c);
  w.u16(h);
  w.u16(wd);
}

struct Header {
  std::uint64_t count;
  std::uint16_t k, c, h, w;
};

inline Header read_header(io::ByteReader& r) {
  if (r.remaining() < 4) throw IoError("truncated header in " + r.source());
  if (r.bytes(4) != std::string_view(kDatasetMagic, 4)) {
    throw FormatError(r.source() + " is not an LCSB file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw FormatError("unsupported LCSB version " + std::to_string(version) +
                      " in " + r.source());
  }
  Header h{};
  h.count = r.u64();
  h.k = r.u16();
  h.c = r.u16();
  h.h = r.u16();
  h.w = r.u16();
  return h;
}

inline void write_trailer(io::ByteWriter& w, const Sample& s) {
  w.u8(static_cast<std::uint8_t>(s.split));
  w.u32(s.group);
  if (s.labels.points.size() > 0xFFFF) throw ValidationError("too many labels in one sample");
  w.u16(static_cast<std::uint16_t>(s.labels.points.size()));
  for (const auto& p : s.labels.points) {
    w.u16(p.row);
    w.u16(p.col);
    w.u16(p.cls);
  }
}

inline void read_trailer(io::ByteReader& r, Sample& s, const Header& h) {
  const std::uint8_t split = r.u8();
  if (split > 2) throw FormatError("invalid split byte in " + r.source());
  s.split = static_cast<Split>(split);
  s.group = r.u32();
  const std::uint16_t n = r.u16();
  s.labels.classes = h.k;
  s.labels.points.resize(n);
  for (auto& p : s.labels.points) {
    p.row = r.u16();
    p.col = r.u16();
    p.cls = r.u16();
  }
  validate_labels(s.labels, h.h, h.w);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_dataset(const Dataset& d) {
  io::ByteWriter w;
  detail::write_header(w, d.samples.size(), d.classes, d.channels, d.height, d.width);
  for (const auto& s : d.samples) {
    if (s.image.channels != d.channels || s.image.height != d.height ||
        s.image.width != d.width) {
      throw ValidationError("all samples must share C, H, W");
    }
    if (s.labels.classes != d.classes) {
      throw ValidationError("all samples must share the class count K");
    }
    validate_labels(s.labels, d.height, d.width);
    for (float v : s.image.values) w.f32(v);
    detail::write_trailer(w, s);
  }
  return w.buffer();
}

inline Dataset decode_dataset(std::vector<std::uint8_t> bytes, std::string source) {
  io::ByteReader r(std::move(bytes), std::move(source));
  const auto h = detail::read_header(r);
  Dataset d;
  d.classes = h.k;
  d.channels = h.c;
  d.height = h.h;
  d.width = h.w;
  const std::size_t per_sample = static_cast<std::size_t>(h.c) * h.h * h.w * 4 + 7;
  if (h.count > r.remaining() / per_sample + 1) {
    throw IoError("truncated payload in " + r.source() + ": header announces " +
                  std::to_string(h.count) + " samples");
  }
  d.samples.resize(h.count);
  for (auto& s : d.samples) {
    s.image = Raster(h.c, h.h, h.w);
    for (auto& v : s.image.values) v = r.f32();
    detail::read_trailer(r, s, h);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last sample in " + r.source());
  return d;
}

/// Writes the dataset; throws ValidationError before touching the file if any
/// sample breaks the shared-shape or border rules.
inline void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  io::write_file(path, encode_dataset(d));
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  return decode_dataset(io::read_file(path), path.string());
}

inline std::vector<std::uint8_t> encode_truth(const TruthSet& t) {
  io::ByteWriter w;
  detail::write_header(w, t.maps.size(), t.classes, 1, t.height, t.width);
  for (std::size_t i = 0; i < t.maps.size(); ++i) {
    const auto& m = t.maps[i];
    if (m.height != t.height || m.width != t.width) {
      throw ValidationError("all class maps must share H, W");
    }
    for (std::uint16_t v : m.data) w.u16(v);
    detail::write_trailer(w, i < t.meta.size() ? t.meta[i] : Sample{});
  }
  return w.buffer();
}

inline TruthSet decode_truth(std::vector<std::uint8_t> bytes, std::string source) {
  io::ByteReader r(std::move(bytes), std::move(source));
  const auto h = detail::read_header(r);
  if (h.c != 1) throw FormatError("class raster file must have C = 1 in " + r.source());
  TruthSet t;
  t.classes = h.k;
  t.height = h.h;
  t.width = h.w;
  const std::size_t per_sample = static_cast<std::size_t>(h.h) * h.w * 2 + 7;
  if (h.count > r.remaining() / per_sample + 1) {
    throw IoError("truncated payload in " + r.source());
  }
  t.maps.resize(h.count);
  t.meta.resize(h.count);
  for (std::size_t i = 0; i < h.count; ++i) {
    t.maps[i] = ClassMap(h.h, h.w);
    for (auto& v : t.maps[i].data) v = r.u16();
    t.meta[i].labels.classes = h.k;
    detail::read_trailer(r, t.meta[i], h);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last sample in " + r.source());
  return t;
}

inline void write_truth(const TruthSet& t, const std::filesystem::path& path) {
  io::write_file(path, encode_truth(t));
}

inline TruthSet read_truth(const std::filesystem::path& path) {
  return decode_truth(io::read_file(path), path.string());
}

/// Plain-text manifest: one line per sample, `index split group`, where split
/// is `train`, `val`, `test` or 0/1/2. Blank lines and `#` comments are skipped.
/// Samples not mentioned keep their stored split and group.
inline void apply_manifest(Dataset& d, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::size_t index = 0;
    std::string split;
    std::uint32_t group = 0;
    if (!(ls >> index)) continue;
    if (!(ls >> split >> group)) {
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": expected `index split group`");
    }
    if (index >= d.samples.size()) {
      throw ValidationError("manifest line " + std::to_string(lineno) +
                            ": sample index out of range");
    }
    Split s;
    if (split == "train" || split == "0") s = Split::kTrain;
    else if (split == "val" || split == "1") s = Split::kVal;
    else if (split == "test" || split == "2") s = Split::kTest;
    else throw FormatError("manifest line " + std::to_string(lineno) + ": unknown split `" + split + "`");
    d.samples[index].split = s;
    d.samples[index].group = group;
  }
}

}  // namespace lcslab

#include "shortmr/io/nifti.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "shortmr/errors.hpp"

namespace shortmr::io {

namespace {

constexpr std::int32_t kHeaderSize = 348;
constexpr std::int32_t kHeaderSizeSwapped = 1543569408;  // byte-swapped 348
constexpr float kVoxOffset = 352.0f;

void put_i32(std::uint8_t* p, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  p[0] = u & 0xFF;
  p[1] = (u >> 8) & 0xFF;
  p[2] = (u >> 16) & 0xFF;
  p[3] = (u >> 24) & 0xFF;
}

void put_i16(std::uint8_t* p, std::int16_t v) {
  const auto u = static_cast<std::uint16_t>(v);
  p[0] = u & 0xFF;
  p[1] = (u >> 8) & 0xFF;
}

void put_f32(std::uint8_t* p, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  p[0] = u & 0xFF;
  p[1] = (u >> 8) & 0xFF;
  p[2] = (u >> 16) & 0xFF;
  p[3] = (u >> 24) & 0xFF;
}

std::int32_t get_i32(const std::uint8_t* p) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(p[0]) |
                                   (static_cast<std::uint32_t>(p[1]) << 8) |
                                   (static_cast<std::uint32_t>(p[2]) << 16) |
                                   (static_cast<std::uint32_t>(p[3]) << 24));
}

std::int16_t get_i16(const std::uint8_t* p) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) |
                                   (static_cast<std::uint16_t>(p[1]) << 8));
}

float get_f32(const std::uint8_t* p) {
  const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                          (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

int bitpix_of(NiftiDType d) {
  switch (d) {
    case NiftiDType::int16:
      return 16;
    case NiftiDType::int32:
    case NiftiDType::float32:
      return 32;
  }
  return 0;
}

struct ParsedHeader {
  Shape3 shape;
  Spacing3 spacing;
  NiftiDType dtype;
  std::size_t data_offset;
};

ParsedHeader parse_header(const std::vector<std::uint8_t>& bytes,
                          const std::string& what) {
  if (bytes.size() < 352) {
    throw ValidationError(what + ": file too small for a NIfTI-1 header");
  }
  const std::int32_t hdr = get_i32(bytes.data());
  if (hdr == kHeaderSizeSwapped) {
    throw ValidationError(what + ": big-endian NIfTI files are not supported");
  }
  if (hdr != kHeaderSize) {
    throw ValidationError(what + ": not a NIfTI-1 file (sizeof_hdr != 348)");
  }
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) {
    throw ValidationError(what + ": bad magic (expected single-file \"n+1\")");
  }
  if (bytes[348] != 0) {
    throw ValidationError(what + ": NIfTI extensions are not supported");
  }
  const std::int16_t ndim = get_i16(bytes.data() + 40);
  if (ndim != 3) {
    throw ValidationError(what + ": only 3-dimensional volumes are supported");
  }
  ParsedHeader out;
  for (int a = 0; a < 3; ++a) {
    const std::int16_t n = get_i16(bytes.data() + 40 + 2 * (a + 1));
    if (n < 1) throw ValidationError(what + ": non-positive dimension");
    out.shape[a] = n;
    const float sp = get_f32(bytes.data() + 76 + 4 * (a + 1));
    out.spacing[a] = sp > 0.0f ? static_cast<double>(sp) : 1.0;
  }
  const std::int16_t dtype = get_i16(bytes.data() + 70);
  if (dtype != static_cast<std::int16_t>(NiftiDType::int16) &&
      dtype != static_cast<std::int16_t>(NiftiDType::int32) &&
      dtype != static_cast<std::int16_t>(NiftiDType::float32)) {
    throw ValidationError(what + ": unsupported datatype (code " +
                          std::to_string(dtype) + ")");
  }
  out.dtype = static_cast<NiftiDType>(dtype);
  const float vox_offset = get_f32(bytes.data() + 108);
  if (vox_offset < 352.0f) {
    throw ValidationError(what + ": vox_offset below 352");
  }
  out.data_offset = static_cast<std::size_t>(vox_offset);
  const auto need = out.data_offset +
                    static_cast<std::size_t>(out.shape[0] * out.shape[1] *
                                             out.shape[2]) *
                        (static_cast<std::size_t>(bitpix_of(out.dtype)) / 8);
  if (bytes.size() < need) {
    throw ValidationError(what + ": truncated payload");
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                   std::istreambuf_iterator<char>());
}

std::vector<std::uint8_t> build_header(Shape3 shape, Spacing3 spacing,
                                       NiftiDType dtype) {
  std::vector<std::uint8_t> h(352, 0);
  put_i32(h.data(), kHeaderSize);
  put_i16(h.data() + 40, 3);
  for (int a = 0; a < 3; ++a) {
    if (shape[a] < 1 || shape[a] > 32767) {
      throw ValidationError("write_volume: dimension out of int16 range");
    }
    put_i16(h.data() + 40 + 2 * (a + 1), static_cast<std::int16_t>(shape[a]));
    put_f32(h.data() + 76 + 4 * (a + 1), static_cast<float>(spacing[a]));
  }
  for (int a = 4; a <= 7; ++a) put_i16(h.data() + 40 + 2 * a, 1);
  put_i16(h.data() + 70, static_cast<std::int16_t>(dtype));
  put_i16(h.data() + 72, static_cast<std::int16_t>(bitpix_of(dtype)));
  put_f32(h.data() + 108, kVoxOffset);
  std::memcpy(h.data() + 344, "n+1\0", 4);
  // bytes 348..351 stay zero: no extensions
  return h;
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& header,
                const std::vector<std::uint8_t>& payload) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write '" + path.string() + "'");
  f.write(reinterpret_cast<const char*>(header.data()),
          static_cast<std::streamsize>(header.size()));
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (!f) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

}  // namespace

Volume read_volume(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const auto hdr = parse_header(bytes, path.filename().string());
  Volume v(hdr.shape, hdr.spacing);
  const std::uint8_t* src = bytes.data() + hdr.data_offset;
  const std::size_t n = v.data.size();
  switch (hdr.dtype) {
    case NiftiDType::float32:
      for (std::size_t i = 0; i < n; ++i) {
        v.data[i] = get_f32(src + 4 * i);
      }
      break;
    case NiftiDType::int16:
      for (std::size_t i = 0; i < n; ++i) {
        v.data[i] = static_cast<float>(get_i16(src + 2 * i));
      }
      break;
    case NiftiDType::int32:
      for (std::size_t i = 0; i < n; ++i) {
        v.data[i] = static_cast<float>(get_i32(src + 4 * i));
      }
      break;
  }
  return v;
}

void write_volume(const Volume& v, const std::filesystem::path& path,
                  NiftiDType dtype) {
  validate_volume(v);
  const auto header = build_header(v.shape, v.spacing, dtype);
  std::vector<std::uint8_t> payload;
  const std::size_t n = v.data.size();
  switch (dtype) {
    case NiftiDType::float32:
      payload.resize(4 * n);
      for (std::size_t i = 0; i < n; ++i) put_f32(payload.data() + 4 * i, v.data[i]);
      break;
    case NiftiDType::int16:
    case NiftiDType::int32: {
      const double lo = dtype == NiftiDType::int16 ? -32768.0 : -2147483648.0;
      const double hi = dtype == NiftiDType::int16 ? 32767.0 : 2147483647.0;
      payload.resize(n * (dtype == NiftiDType::int16 ? 2 : 4));
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(v.data[i]);
        if (d != std::floor(d) || d < lo || d > hi) {
          throw ValidationError("write_volume: value " + std::to_string(d) +
                                " not representable in the requested datatype");
        }
        if (dtype == NiftiDType::int16) {
          put_i16(payload.data() + 2 * i, static_cast<std::int16_t>(d));
        } else {
          put_i32(payload.data() + 4 * i, static_cast<std::int32_t>(d));
        }
      }
      break;
    }
  }
  write_file(path, header, payload);
}

LabelGrid read_labels(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const auto hdr = parse_header(bytes, path.filename().string());
  if (hdr.dtype == NiftiDType::float32) {
    throw ValidationError(path.filename().string() +
                          ": label grids must use an integer datatype");
  }
  LabelGrid g;
  g.shape = hdr.shape;
  g.spacing = hdr.spacing;
  const std::size_t n =
      static_cast<std::size_t>(g.shape[0] * g.shape[1] * g.shape[2]);
  g.labels.resize(n);
  const std::uint8_t* src = bytes.data() + hdr.data_offset;
  if (hdr.dtype == NiftiDType::int16) {
    for (std::size_t i = 0; i < n; ++i) g.labels[i] = get_i16(src + 2 * i);
  } else {
    for (std::size_t i = 0; i < n; ++i) g.labels[i] = get_i32(src + 4 * i);
  }
  return g;
}

void write_labels(const LabelGrid& grid, const std::filesystem::path& path) {
  const auto header = build_header(grid.shape, grid.spacing, NiftiDType::int32);
  std::vector<std::uint8_t> payload(4 * grid.labels.size());
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    put_i32(payload.data() + 4 * i, grid.labels[i]);
  }
  write_file(path, header, payload);
}

void save_atlas(const Atlas& atlas, const std::filesystem::path& volume_path,
                const std::filesystem::path& names_path) {
  validate_atlas(atlas);
  LabelGrid g;
  g.shape = atlas.shape;
  g.spacing = atlas.spacing;
  g.labels = atlas.labels;
  write_labels(g, volume_path);

  nlohmann::json j;
  j["omega"] = atlas.omega;
  j["region_names"] = atlas.region_names;
  if (names_path.has_parent_path()) {
    std::filesystem::create_directories(names_path.parent_path());
  }
  std::ofstream f(names_path, std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write '" + names_path.string() + "'");
  f << j.dump(2) << "\n";
}

Atlas load_atlas(const std::filesystem::path& volume_path,
                 const std::filesystem::path& names_path) {
  const auto g = read_labels(volume_path);
  std::ifstream f(names_path);
  if (!f) throw RuntimeFailure("cannot open '" + names_path.string() + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ValidationError("atlas sidecar '" + names_path.string() +
                          "' is not valid JSON: " + e.what());
  }
  Atlas atlas;
  atlas.shape = g.shape;
  atlas.spacing = g.spacing;
  atlas.labels = g.labels;
  atlas.omega = j.at("omega").get<int>();
  atlas.region_names = j.at("region_names").get<std::vector<std::string>>();
  validate_atlas(atlas);
  return atlas;
}

}  // namespace shortmr::io

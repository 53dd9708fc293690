#pragma once

// Binary container shared by record and checkpoint files:
//   8-byte magic | u32 version | u32 header length | JSON header | f64 blocks
// All integers and floats little-endian. The header lists every block with
// its name, element count and CRC-32.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "fecg/core.hpp"

namespace fecg::io {

using json = nlohmann::json;

inline std::uint32_t crc32_bytes(const unsigned char* p, std::size_t n) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = ::crc32(c, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline std::string encode_f64(std::span<const double> x) {
  std::string out;
  out.resize(8 * x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto bits = std::bit_cast<std::uint64_t>(x[k]);
    for (int i = 0; i < 8; ++i) out[8 * k + static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  }
  return out;
}

inline std::vector<double> decode_f64(const unsigned char* p, std::size_t count) {
  std::vector<double> x(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[8 * k + static_cast<std::size_t>(i)]) << (8 * i);
    x[k] = std::bit_cast<double>(bits);
  }
  return x;
}

struct Block {
  std::string name;
  std::vector<double> data;
};

struct Container {
  json header;  // caller metadata; the "blocks" key is managed here
  std::vector<Block> blocks;
};

inline std::string serialize(const std::string& magic, std::uint32_t version, Container c) {
  if (magic.size() != 8) throw InvalidInput("container magic must be 8 bytes");
  std::string payload;
  json list = json::array();
  for (const Block& b : c.blocks) {
    const std::string bytes = encode_f64(b.data);
    list.push_back({{"name", b.name},
                    {"count", b.data.size()},
                    {"crc32", crc32_bytes(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size())}});
    payload += bytes;
  }
  c.header["blocks"] = list;
  const std::string head = c.header.dump();
  std::string out = magic;
  put_u32(out, version);
  put_u32(out, static_cast<std::uint32_t>(head.size()));
  out += head;
  out += payload;
  return out;
}

inline Container deserialize(const std::string& bytes, const std::string& magic, std::uint32_t max_version,
                             std::uint32_t* version_out = nullptr) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16) throw TruncatedError("file shorter than its fixed preamble");
  if (bytes.compare(0, 8, magic) != 0) throw FormatError("bad magic: not a " + magic.substr(0, magic.find('\0')) + " file");
  const std::uint32_t version = get_u32(p + 8);
  if (version > max_version)
    throw VersionError("format version " + std::to_string(version) + " is newer than supported version " +
                       std::to_string(max_version));
  if (version_out) *version_out = version;
  const std::size_t hlen = get_u32(p + 12);
  if (bytes.size() < 16 + hlen) throw TruncatedError("file ends inside its header");
  Container c;
  try {
    c.header = json::parse(bytes.substr(16, hlen));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  std::size_t off = 16 + hlen;
  try {
    for (const auto& b : c.header.at("blocks")) {
      const std::size_t count = b.at("count").get<std::size_t>();
      if (bytes.size() < off + 8 * count) throw TruncatedError("file ends inside block '" + b.at("name").get<std::string>() + "'");
      const std::uint32_t crc = crc32_bytes(p + off, 8 * count);
      if (crc != b.at("crc32").get<std::uint32_t>())
        throw ChecksumError("checksum mismatch in block '" + b.at("name").get<std::string>() + "'");
      c.blocks.push_back({b.at("name").get<std::string>(), decode_f64(p + off, count)});
      off += 8 * count;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed block table: ") + e.what());
  }
  if (off != bytes.size()) throw FormatError("unexpected trailing data after the last block");
  c.header.erase("blocks");
  return c;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw StorageError("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw StorageError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot move " + tmp.string() + " into place: " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw StorageError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

inline void write_text(const std::filesystem::path& path, const std::string& text) { write_file(path, text); }

}  // namespace fecg::io

#pragma once

// Checkpoint files: architecture, STFT settings, segment normalization and
// seed in the JSON header, parameters as f64 blocks in declaration order.

#include "fecg/cunet/train.hpp"
#include "fecg/io.hpp"

namespace fecg::cunet {

inline constexpr char kCheckpointMagic[] = "FECGCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  CUNet net;
  spectral::StftConfig stft;
  SegmentPlan segments;
  double fs = kDefaultFs;
  std::uint64_t seed = 0;
  io::json extra = io::json::object();  // free-form provenance (training summary etc.)
};

inline io::json architecture_json(const CUNetConfig& c) {
  return {{"F", c.F},
          {"T", c.T},
          {"depth", c.depth},
          {"channels", c.channels},
          {"kernel", c.kernel},
          {"activation", activation_name(c.activation)},
          {"conv_mode", conv_mode_name(c.conv_mode)}};
}

inline CUNetConfig architecture_from_json(const io::json& j) {
  CUNetConfig c;
  c.F = j.at("F").get<int>();
  c.T = j.at("T").get<int>();
  c.depth = j.at("depth").get<int>();
  c.channels = j.at("channels").get<std::vector<int>>();
  c.kernel = j.at("kernel").get<int>();
  c.activation = activation_from_name(j.at("activation").get<std::string>());
  c.conv_mode = conv_mode_from_name(j.at("conv_mode").get<std::string>());
  return c;
}

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  io::Container c;
  c.header = {{"architecture", architecture_json(ck.net.cfg)},
              {"stft",
               {{"window_len", ck.stft.window_len},
                {"hop", ck.stft.hop},
                {"window", spectral::window_name(ck.stft.window)},
                {"fft_len", ck.stft.fft_len}}},
              {"normalization", {{"kind", "segment_std"}, {"segment_length", ck.segments.length}, {"segment_hop", ck.segments.hop}}},
              {"fs", ck.fs},
              {"seed", ck.seed},
              {"extra", ck.extra}};
  for (const ParamBlock& b : ck.net.ps.blocks) {
    const auto first = ck.net.ps.values.begin() + static_cast<std::ptrdiff_t>(b.offset);
    c.blocks.push_back({b.name, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(b.count))});
  }
  return io::serialize(std::string(kCheckpointMagic, 8), kCheckpointVersion, std::move(c));
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  io::write_file(path, serialize_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const io::Container c = io::deserialize(io::read_file(path), std::string(kCheckpointMagic, 8), kCheckpointVersion);
  Checkpoint ck;
  try {
    const auto& h = c.header;
    ck.net = build_cunet(architecture_from_json(h.at("architecture")));
    const auto& s = h.at("stft");
    ck.stft.window_len = s.at("window_len").get<int>();
    ck.stft.hop = s.at("hop").get<int>();
    ck.stft.window = spectral::window_from_name(s.at("window").get<std::string>());
    ck.stft.fft_len = s.at("fft_len").get<int>();
    ck.segments.length = h.at("normalization").at("segment_length").get<std::size_t>();
    ck.segments.hop = h.at("normalization").at("segment_hop").get<std::size_t>();
    ck.fs = h.at("fs").get<double>();
    ck.seed = h.at("seed").get<std::uint64_t>();
    ck.extra = h.value("extra", io::json::object());
  } catch (const io::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (c.blocks.size() != ck.net.ps.blocks.size())
    throw StructuralError("checkpoint has " + std::to_string(c.blocks.size()) + " parameter blocks, architecture declares " +
                          std::to_string(ck.net.ps.blocks.size()));
  for (std::size_t i = 0; i < c.blocks.size(); ++i) {
    const ParamBlock& b = ck.net.ps.blocks[i];
    if (c.blocks[i].name != b.name || c.blocks[i].data.size() != b.count)
      throw StructuralError("checkpoint block '" + c.blocks[i].name + "' does not match '" + b.name + "'");
    std::copy(c.blocks[i].data.begin(), c.blocks[i].data.end(), ck.net.ps.values.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  return ck;
}

}  // namespace fecg::cunet

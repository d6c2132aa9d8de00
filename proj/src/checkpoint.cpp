#include "waveshape/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "waveshape/errors.hpp"

namespace waveshape::nn {

namespace {

constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for write: " + path);
  os.write("WNCK", 4);
  put(os, kVersion);
  const std::string desc = ckpt.config.descriptor();
  put(os, static_cast<std::uint32_t>(desc.size()));
  os.write(desc.data(), static_cast<std::streamsize>(desc.size()));
  put(os, static_cast<std::uint64_t>(ckpt.params.size()));
  os.write(reinterpret_cast<const char*>(ckpt.params.data()),
           static_cast<std::streamsize>(ckpt.params.size() * sizeof(float)));
  put(os, static_cast<std::uint8_t>(ckpt.has_optimizer ? 1 : 0));
  if (ckpt.has_optimizer) {
    put(os, ckpt.adam_step);
    put(os, static_cast<std::uint64_t>(ckpt.adam_state.size()));
    os.write(reinterpret_cast<const char*>(ckpt.adam_state.data()),
             static_cast<std::streamsize>(ckpt.adam_state.size() * sizeof(float)));
  }
  put(os, ckpt.norm.in_mean);
  put(os, ckpt.norm.in_std);
  put(os, ckpt.norm.out_mean);
  put(os, ckpt.norm.out_std);
  if (!os) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "WNCK", 4) != 0)
    throw DataError("checkpoint: bad magic (expected WNCK): " + path);
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw DataError("checkpoint: unsupported version");
  const auto desc_len = get<std::uint32_t>(is);
  std::string desc(desc_len, '\0');
  is.read(desc.data(), desc_len);

  Checkpoint ckpt;
  ckpt.config = NetConfig::from_descriptor(desc);
  const auto n_params = get<std::uint64_t>(is);
  ckpt.params.resize(n_params);
  is.read(reinterpret_cast<char*>(ckpt.params.data()),
          static_cast<std::streamsize>(n_params * sizeof(float)));
  ckpt.has_optimizer = get<std::uint8_t>(is) != 0;
  if (ckpt.has_optimizer) {
    ckpt.adam_step = get<std::uint64_t>(is);
    const auto n_state = get<std::uint64_t>(is);
    ckpt.adam_state.resize(n_state);
    is.read(reinterpret_cast<char*>(ckpt.adam_state.data()),
            static_cast<std::streamsize>(n_state * sizeof(float)));
  }
  ckpt.norm.in_mean = get<double>(is);
  ckpt.norm.in_std = get<double>(is);
  ckpt.norm.out_mean = get<double>(is);
  ckpt.norm.out_std = get<double>(is);
  if (!is) throw DataError("checkpoint: truncated file: " + path);
  return ckpt;
}

Checkpoint make_checkpoint(const UNet3d& net, const NormAffine& norm,
                           const Adam* opt) {
  Checkpoint ckpt;
  ckpt.config = net.config();
  ckpt.params = net.flatten_parameters();
  ckpt.norm = norm;
  if (opt != nullptr) {
    ckpt.has_optimizer = true;
    ckpt.adam_step = opt->step_count();
    ckpt.adam_state = opt->flatten_state();
  }
  return ckpt;
}

UNet3d net_from_checkpoint(const Checkpoint& ckpt) {
  UNet3d net(ckpt.config, Rng(0));
  net.load_parameters(ckpt.params);
  return net;
}

}  // namespace waveshape::nn

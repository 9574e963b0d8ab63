#include "prefnet/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "prefnet/core/errors.hpp"

namespace prefnet::nn {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'R', 'E', 'F', 'N', 'E', 'T', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw FormatError("checkpoint: truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

void put_f64(std::ostream& out, double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

std::string get_bytes(std::istream& in, std::uint64_t n) {
  if (n > (1ULL << 32)) throw FormatError("checkpoint: implausible length");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("checkpoint: truncated");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = checkpoint.metadata.dump();
  put_le<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& [name, t] : checkpoint.tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, t.rows());
    put_le<std::uint64_t>(out, t.cols());
    for (double v : t.value()) put_f64(out, v);
  }
  if (!out) throw FormatError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  const auto meta_len = get_le<std::uint64_t>(in);
  try {
    ck.metadata = nlohmann::json::parse(get_bytes(in, meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  const auto count = get_le<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get_le<std::uint32_t>(in);
    std::string name = get_bytes(in, name_len);
    const auto ndims = get_le<std::uint32_t>(in);
    if (ndims == 0 || ndims > 2) throw FormatError("checkpoint: tensor '" + name + "' has unsupported rank");
    std::uint64_t dims[2] = {1, 1};
    for (std::uint32_t d = 0; d < ndims; ++d) dims[d + (ndims == 1 ? 1 : 0)] = get_le<std::uint64_t>(in);
    if (dims[0] * dims[1] > (1ULL << 28)) throw FormatError("checkpoint: tensor too large");
    std::vector<double> values(dims[0] * dims[1]);
    for (double& v : values) v = get_f64(in);
    Tensor t = Tensor::parameter(Matrix(dims[0], dims[1], std::move(values)));
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"hidden", c.hidden}, {"steps", c.steps}, {"pref_dims", c.pref_dims}, {"ff_layers", c.ff_layers},
          {"ff_width", c.ff_width}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.hidden = j.at("hidden").get<std::size_t>();
    c.steps = j.at("steps").get<std::size_t>();
    c.pref_dims = j.at("pref_dims").get<std::size_t>();
    c.ff_layers = j.at("ff_layers").get<std::size_t>();
    c.ff_width = j.value("ff_width", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  return c;
}

}  // namespace prefnet::nn

#include "sortpress/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "sortpress/ppo.hpp"

namespace sortpress {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    static_assert(sizeof(T) == sizeof(U));
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  void put_bytes(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string origin) : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    if (pos_ + sizeof(U) > bytes_.size()) throw CheckpointError(origin_ + ": truncated checkpoint");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
  }
  void expect_bytes(const char* data, std::size_t n) {
    if (pos_ + n > bytes_.size() || std::memcmp(bytes_.data() + pos_, data, n) != 0) {
      throw CheckpointError(origin_ + ": not a sortpress checkpoint");
    }
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::vector<float> flat_floats(const ActorCritic<double>& network) {
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(network.parameter_count()));
  for (double v : network.policy.parameters()) out.push_back(static_cast<float>(v));
  for (double v : network.value.parameters()) out.push_back(static_cast<float>(v));
  return out;
}

std::vector<int> hidden_sizes(const Mlp<double>& net) {
  const auto& sizes = net.layer_sizes();
  return {sizes.begin() + 1, sizes.end() - 1};
}

}  // namespace

int PolicyArtifact::greedy_action(const Eigen::VectorXd& observation, const ActionMask* mask) const {
  const Eigen::VectorXd logits = network.policy.forward(observation);
  return masked_distribution(logits, mask).argmax();
}

void round_to_float(ActorCritic<double>& network) {
  network.policy.parameters() = network.policy.parameters().cast<float>().cast<double>();
  network.value.parameters() = network.value.parameters().cast<float>().cast<double>();
}

std::uint64_t weight_checksum(const ActorCritic<double>& network) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (float f : flat_floats(network)) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
      hash ^= (bits >> (8 * i)) & 0xFFu;
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

void save_checkpoint(const PolicyArtifact& artifact, const std::filesystem::path& path) {
  Writer w;
  w.put_bytes(kMagic.data(), kMagic.size());
  w.put(kFormatVersion);
  w.put(static_cast<std::uint32_t>(artifact.kind));
  w.put(static_cast<std::uint32_t>(artifact.masked ? 1 : 0));
  w.put(artifact.seed);
  w.put(static_cast<std::uint64_t>(artifact.timesteps));
  w.put(static_cast<std::uint32_t>(artifact.network.obs_len()));
  w.put(static_cast<std::uint32_t>(artifact.network.n_actions()));
  const auto hidden = hidden_sizes(artifact.network.policy);
  w.put(static_cast<std::uint32_t>(hidden.size()));
  for (int h : hidden) w.put(static_cast<std::uint32_t>(h));
  w.put(static_cast<std::uint64_t>(artifact.network.policy.parameter_count()));
  w.put(static_cast<std::uint64_t>(artifact.network.value.parameter_count()));
  w.put(weight_checksum(artifact.network));
  for (float f : flat_floats(artifact.network)) w.put(f);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

PolicyArtifact load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}), path.string());
  r.expect_bytes(kMagic.data(), kMagic.size());
  if (const auto version = r.get<std::uint32_t>(); version != kFormatVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  PolicyArtifact a;
  const auto kind = r.get<std::uint32_t>();
  if (kind > static_cast<std::uint32_t>(AgentKind::Monolithic)) {
    throw CheckpointError(path.string() + ": unknown agent kind " + std::to_string(kind));
  }
  a.kind = static_cast<AgentKind>(kind);
  a.masked = r.get<std::uint32_t>() != 0;
  a.seed = r.get<std::uint64_t>();
  a.timesteps = static_cast<std::int64_t>(r.get<std::uint64_t>());
  const int obs_len = static_cast<int>(r.get<std::uint32_t>());
  const int n_actions = static_cast<int>(r.get<std::uint32_t>());
  const AgentSpec spec = agent_spec(a.kind);
  if (obs_len != spec.obs_len || n_actions != spec.n_actions) {
    throw CheckpointError(path.string() + ": shape (" + std::to_string(n_actions) + " actions, " +
                          std::to_string(obs_len) + " observations) does not match agent kind " +
                          std::string(to_string(a.kind)));
  }
  const auto n_hidden = r.get<std::uint32_t>();
  if (n_hidden > 16) throw CheckpointError(path.string() + ": implausible hidden layer count");
  std::vector<int> pi{obs_len};
  for (std::uint32_t i = 0; i < n_hidden; ++i) pi.push_back(static_cast<int>(r.get<std::uint32_t>()));
  std::vector<int> vf = pi;
  pi.push_back(n_actions);
  vf.push_back(1);
  a.network = {Mlp<double>(pi), Mlp<double>(vf)};
  const auto n_policy = r.get<std::uint64_t>();
  const auto n_value = r.get<std::uint64_t>();
  if (n_policy != static_cast<std::uint64_t>(a.network.policy.parameter_count()) ||
      n_value != static_cast<std::uint64_t>(a.network.value.parameter_count())) {
    throw CheckpointError(path.string() + ": parameter count does not match layer sizes");
  }
  const auto checksum = r.get<std::uint64_t>();
  for (auto& v : a.network.policy.parameters()) v = r.get<float>();
  for (auto& v : a.network.value.parameters()) v = r.get<float>();
  if (!r.done()) throw CheckpointError(path.string() + ": trailing bytes after parameter block");
  if (weight_checksum(a.network) != checksum) throw CheckpointError(path.string() + ": weight checksum mismatch");
  return a;
}

}  // namespace sortpress

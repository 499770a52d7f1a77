#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "insardet/classifier.hpp"
#include "network.hpp"

namespace insardet {

using Json = nlohmann::json;

Architecture Architecture::tiny() { return {24, {{4, 3}, {8, 3}}}; }

void Architecture::validate() const {
  if (blocks.empty()) throw std::invalid_argument("architecture needs at least one block");
  int size = input_size;
  for (const auto& b : blocks) {
    if (b.channels < 1 || b.kernel < 1 || b.kernel % 2 == 0)
      throw std::invalid_argument("conv blocks need positive channels and odd kernels");
    size /= 2;
  }
  if (size < 1) throw std::invalid_argument("input too small for the pooling stack");
}

std::size_t Architecture::parameter_count() const {
  std::size_t n = 0;
  detail::layer_shapes(*this, &n);
  return n;
}

CnnModel::CnnModel(Architecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  std::size_t n = 0;
  const auto shapes = detail::layer_shapes(arch_, &n);
  params_.assign(n, 0.0f);
  Rng rng(mix_seed(seed));
  for (const auto& s : shapes) {
    const double fan_in = double(s.cin) * s.k * s.k;
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / fan_in));
    for (std::size_t i = s.w_offset; i < s.b_offset; ++i) params_[i] = static_cast<float>(he(rng));
  }
  const auto& last = shapes.back();
  std::normal_distribution<double> head(0.0, std::sqrt(1.0 / last.cout));
  for (int i = 0; i < last.cout; ++i) params_[last.b_offset + last.cout + i] = static_cast<float>(head(rng));
  meta_.seed = seed;
}

double CnnModel::logit(const Raster<std::uint8_t>& patch) const {
  if (patch.rows() != arch_.input_size || patch.cols() != arch_.input_size)
    throw std::invalid_argument("patch size mismatch: expected " + std::to_string(arch_.input_size) + "x" +
                                std::to_string(arch_.input_size));
  const detail::Network<float> net(arch_);
  thread_local detail::Network<float>::Workspace ws;
  return net.forward(params_.data(), patch, ws);
}

double CnnModel::predict(const Raster<std::uint8_t>& patch) const {
  const double z = logit(patch);
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

namespace {

std::uint64_t fnv1a64(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::string weights_blob(const std::vector<float>& params) {
  std::string blob(params.size() * 4, '\0');
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(params[i]);
    for (int b = 0; b < 4; ++b) blob[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return blob;
}

}  // namespace

constexpr const char* kHead = "globalmax-dense-sigmoid";

void CnnModel::save(const std::filesystem::path& path) const {
  const std::string blob = weights_blob(params_);
  auto bin = path;
  bin += ".bin";
  Json blocks = Json::array();
  for (const auto& b : arch_.blocks) blocks.push_back({{"channels", b.channels}, {"kernel", b.kernel}});
  const Json desc = {
      {"format", "insardet-cnn"},
      {"version", 1},
      {"architecture",
       {{"input_size", arch_.input_size}, {"blocks", blocks}, {"pool", 2}, {"head", kHead}}},
      {"training", {{"seed", meta_.seed}, {"epochs", meta_.epochs}, {"samples", meta_.samples},
                    {"loss_curve", meta_.loss_curve}}},
      {"weights",
       {{"file", bin.filename().string()},
        {"dtype", "f32le"},
        {"count", params_.size()},
        {"fnv1a64", hex64(fnv1a64(blob.data(), blob.size()))}}}};
  std::ofstream out(path);
  out << desc.dump(2) << '\n';
  std::ofstream wout(bin, std::ios::binary);
  wout.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out || !wout) throw std::runtime_error("cannot write model " + path.string());
}

CnnModel CnnModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  const Json desc = Json::parse(in);
  if (desc.value("format", "") != "insardet-cnn") throw std::runtime_error("not a model file: " + path.string());

  CnnModel m;
  const auto& a = desc.at("architecture");
  if (a.value("head", "") != kHead) throw std::runtime_error("unsupported model head in " + path.string());
  m.arch_.input_size = a.at("input_size").get<int>();
  m.arch_.blocks.clear();
  for (const auto& b : a.at("blocks")) m.arch_.blocks.push_back({b.at("channels"), b.at("kernel")});
  m.arch_.validate();

  const auto& t = desc.at("training");
  m.meta_.seed = t.at("seed").get<std::uint64_t>();
  m.meta_.epochs = t.at("epochs").get<int>();
  m.meta_.samples = t.at("samples").get<std::size_t>();
  m.meta_.loss_curve = t.at("loss_curve").get<std::vector<double>>();

  const auto& w = desc.at("weights");
  const auto count = w.at("count").get<std::size_t>();
  if (count != m.arch_.parameter_count()) throw std::runtime_error("weight count does not match architecture");
  std::ifstream bin(path.parent_path() / w.at("file").get<std::string>(), std::ios::binary);
  std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (blob.size() != count * 4) throw std::runtime_error("truncated weight blob");
  if (hex64(fnv1a64(blob.data(), blob.size())) != w.at("fnv1a64").get<std::string>())
    throw std::runtime_error("weight checksum mismatch");
  m.params_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(static_cast<unsigned char>(blob[4 * i + b])) << (8 * b);
    m.params_[i] = std::bit_cast<float>(bits);
  }
  return m;
}

}  // namespace insardet

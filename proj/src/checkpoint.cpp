#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "page_io.hpp"
#include "run_config.hpp"

namespace p2g {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', '2', 'G', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(std::string_view in, std::size_t at) {
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  return v;
}

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorKind::CorruptCheckpoint, what); }

}  // namespace

std::string checkpoint_bytes(const Checkpoint& ckpt) {
  json tensors = json::array();
  std::string payload;
  for (const auto& [name, p] : ckpt.params) {
    tensors.push_back({{"name", name},
                       {"shape", p.value.shape},
                       {"dtype", "float32"},
                       {"offset", payload.size()},
                       {"trainable", p.trainable}});
    for (double v : p.value.data) put(payload, static_cast<float>(v));
  }
  const json header{{"model_config", model_config_to_json(ckpt.model)},
                    {"optimizer", adam_to_json(ckpt.optimizer)},
                    {"seed", ckpt.seed},
                    {"category_names", ckpt.category_names},
                    {"tensors", tensors},
                    {"payload_bytes", payload.size()}};
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < 16) corrupt("file too short for a checkpoint header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt("bad magic (expected P2G1)");
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) corrupt("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - 16) corrupt("truncated header");

  json header;
  try {
    header = json::parse(bytes.substr(16, header_len));
  } catch (const json::exception& e) {
    corrupt(std::string("unreadable header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(16 + header_len);

  Checkpoint ckpt;
  try {
    ckpt.model = model_config_from_json(header.at("model_config"));
    ckpt.optimizer = adam_from_json(header.at("optimizer"));
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.category_names = header.at("category_names").get<std::vector<std::string>>();
    const auto payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
    if (payload.size() != payload_bytes) {
      corrupt("payload has " + std::to_string(payload.size()) + " bytes, header declares " +
              std::to_string(payload_bytes));
    }
    ckpt.params = nn::ParamStore(ckpt.seed);
    for (const auto& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      if (t.at("dtype").get<std::string>() != "float32") corrupt("tensor '" + name + "' has unsupported dtype");
      if (ckpt.params.contains(name)) corrupt("duplicate tensor '" + name + "'");
      const std::size_t n = nn::shape_numel(shape);
      if (offset > payload.size() || n * sizeof(float) > payload.size() - offset) {
        corrupt("tensor '" + name + "' runs past the payload");
      }
      auto& p = ckpt.params.add(name, shape, nn::Init::Zeros, t.at("trainable").get<bool>());
      for (std::size_t i = 0; i < n; ++i) p.value.data[i] = get<float>(payload, offset + i * sizeof(float));
    }
  } catch (const json::exception& e) {
    corrupt(std::string("malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptCheckpoint) throw;
    corrupt("invalid header: " + e.detail());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_bytes(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_checkpoint(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

void require_same_config(const ModelConfig& expected, const ModelConfig& found) {
  const auto diff = model_config_diff(expected, found);
  if (diff.empty()) return;
  std::string msg = "model config differs from the checkpoint:";
  for (const auto& d : diff) msg += " " + d + ";";
  msg.pop_back();
  fail(ErrorKind::ConfigMismatch, msg);
}

}  // namespace p2g

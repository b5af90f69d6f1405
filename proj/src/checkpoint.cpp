#include "slim/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <map>

#include "slim/error.hpp"

namespace slim {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr char kMagic[8] = {'S', 'L', 'I', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf.insert(buf.end(), p, p + n);
  }
  std::vector<std::uint8_t> buf;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  template <typename T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw FormatError("checkpoint truncated");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const std::uint8_t* data, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::string hex(std::uint64_t v) {
  char s[17];
  std::snprintf(s, sizeof s, "%016llx", static_cast<unsigned long long>(v));
  return s;
}

void put_group(Writer& w, const std::string& prefix, ModelParams<float>& params) {
  for (auto& r : param_refs(params)) {
    const std::string name = prefix + r.name;
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.value->rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.value->cols()));
    w.bytes(r.value->data(), sizeof(float) * r.value->size());
  }
}

struct Blob {
  std::uint32_t rows = 0, cols = 0;
  const std::uint8_t* data = nullptr;
};

void fill_group(const std::map<std::string, Blob>& blobs, const std::string& prefix,
                ModelParams<float>& params) {
  for (auto& r : param_refs(params)) {
    auto it = blobs.find(prefix + r.name);
    if (it == blobs.end()) throw FormatError("checkpoint is missing tensor " + prefix + r.name);
    const Blob& b = it->second;
    if (b.rows != r.value->rows() || b.cols != r.value->cols())
      throw FormatError("checkpoint tensor " + prefix + r.name + " has shape " +
                        std::to_string(b.rows) + "x" + std::to_string(b.cols) + ", expected " +
                        std::to_string(r.value->rows()) + "x" + std::to_string(r.value->cols()));
    std::memcpy(r.value->data(), b.data, sizeof(float) * r.value->size());
  }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const TrainState& state_in, const SlimConfig& cfg) {
  TrainState& state = const_cast<TrainState&>(state_in);
  nlohmann::json manifest = {
      {"config_hash", hex(state.config_hash)},
      {"step", state.step},
      {"adam_step", state.adam.step},
      {"rng", state.rng.state()},
      {"config", nlohmann::json::parse(config_to_json(cfg, -1))}};
  const std::string mtext = manifest.dump();

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint64_t>(mtext.size());
  w.bytes(mtext.data(), mtext.size());
  const std::uint32_t per_group = static_cast<std::uint32_t>(param_refs(state.student).size());
  w.put<std::uint32_t>(4 * per_group);
  put_group(w, "student/", state.student);
  put_group(w, "teacher/", state.teacher);
  put_group(w, "adam_m/", state.adam.m);
  put_group(w, "adam_v/", state.adam.v);
  w.put<std::uint32_t>(crc(w.buf.data(), w.buf.size()));
  return std::move(w.buf);
}

namespace {

CheckpointData decode_verified(const std::vector<std::uint8_t>& bytes, const ModelConfig* expected,
                               bool force);

}  // namespace

CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes, const ModelConfig* expected,
                                 bool force) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError("not a checkpoint file (bad magic)");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (crc(bytes.data(), bytes.size() - 4) != stored)
    throw ChecksumError("checkpoint checksum mismatch (file is corrupt or was modified)");
  try {
    return decode_verified(bytes, expected, force);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

namespace {

CheckpointData decode_verified(const std::vector<std::uint8_t>& bytes, const ModelConfig* expected,
                               bool force) {
  Reader r(bytes.data(), bytes.size() - 4);
  r.take(sizeof kMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto mlen = r.get<std::uint64_t>();
  const auto* mptr = r.take(mlen);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(std::string(reinterpret_cast<const char*>(mptr), mlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }

  CheckpointData out;
  out.config = parse_config(manifest.at("config").dump());
  const std::uint64_t hash = model_config_hash(out.config.model);
  if (manifest.at("config_hash").get<std::string>() != hex(hash))
    throw FormatError("checkpoint manifest hash does not match its embedded configuration");
  if (expected && !force && model_config_hash(*expected) != hash)
    throw ConfigHashError("checkpoint model configuration (hash " + hex(hash) +
                          ") differs from the requested one (hash " +
                          hex(model_config_hash(*expected)) + "); use --force to override");

  std::map<std::string, Blob> blobs;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto nlen = r.get<std::uint16_t>();
    const auto* nptr = r.take(nlen);
    std::string name(reinterpret_cast<const char*>(nptr), nlen);
    Blob b;
    b.rows = r.get<std::uint32_t>();
    b.cols = r.get<std::uint32_t>();
    b.data = r.take(sizeof(float) * static_cast<std::size_t>(b.rows) * b.cols);
    blobs.emplace(std::move(name), b);
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");

  TrainState& s = out.state;
  s.student = allocate_model(out.config.model);
  s.teacher = s.student;
  s.adam.m = s.student;
  s.adam.v = s.student;
  fill_group(blobs, "student/", s.student);
  fill_group(blobs, "teacher/", s.teacher);
  fill_group(blobs, "adam_m/", s.adam.m);
  fill_group(blobs, "adam_v/", s.adam.v);
  s.step = manifest.at("step").get<std::int64_t>();
  s.adam.step = manifest.at("adam_step").get<std::int64_t>();
  s.rng.set_state(manifest.at("rng").get<std::string>());
  s.config_hash = hash;
  return out;
}

}  // namespace

void save_checkpoint(const TrainState& state, const SlimConfig& cfg, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(state, cfg);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

CheckpointData load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected, bool force) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, expected, force);
}

}  // namespace slim

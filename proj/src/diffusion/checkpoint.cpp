#include "trajcraft/diffusion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "trajcraft/errors.hpp"

namespace trajcraft::diffusion {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'J', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::string take(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ModelParams<float>& params, const nlohmann::json& extra) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  const std::string header =
      nlohmann::json{{"config", config_to_json(params.config)}, {"extra", extra}}.dump();
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  std::uint32_t count = 0;
  params.for_each([&count](const std::string&, ParamGroup, const Matrix<float>&) { ++count; });
  put_u32(out, count);
  params.for_each([&out](const std::string& name, ParamGroup, const Matrix<float>& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(m.data()[i]));
  });
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw FormatError("not a trajcraft checkpoint (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.take(in.u32()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.params = allocate_params<float>(config_from_json(header.at("config")));
    ck.extra = header.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  std::map<std::string, Matrix<float>*> slots;
  ck.params.for_each([&slots](const std::string& name, ParamGroup, Matrix<float>& m) {
    slots[name] = &m;
  });
  const std::uint32_t count = in.u32();
  if (count != slots.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, config expects " +
                      std::to_string(slots.size()));
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = in.take(in.u32());
    const auto it = slots.find(name);
    if (it == slots.end()) throw FormatError("unexpected tensor \"" + name + "\"");
    Matrix<float>& m = *it->second;
    const std::uint32_t rank = in.u32();
    if (rank != 2) throw FormatError("tensor \"" + name + "\" has rank " + std::to_string(rank));
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows != m.rows() || cols != m.cols()) {
      throw FormatError("tensor \"" + name + "\" shape does not match the config");
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<float>(in.u32());
    slots.erase(it);
  }
  if (!in.done()) throw FormatError("trailing bytes after the last tensor");
  return ck;
}

void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path,
                     const nlohmann::json& extra) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  const std::string bytes = encode_checkpoint(params, extra);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("cannot write " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace trajcraft::diffusion

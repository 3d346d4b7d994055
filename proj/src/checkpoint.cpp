#include "polydub/checkpoint.hpp"

#include <cstring>

#include "polydub/common.hpp"

namespace polydub::ckpt {

namespace {

constexpr uint32_t kMagic = 0x5044434Bu;  // "PDCK"
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_str(std::vector<uint8_t>& b, const std::string& s) {
  put_u32(b, static_cast<uint32_t>(s.size()));
  b.insert(b.end(), s.begin(), s.end());
}

void put_f32s(std::vector<uint8_t>& b, const std::vector<float>& v) {
  static_assert(sizeof(float) == 4);
  const size_t off = b.size();
  b.resize(off + v.size() * 4);
  std::memcpy(b.data() + off, v.data(), v.size() * 4);
}

struct Reader {
  const std::vector<uint8_t>& b;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > b.size()) throw BadCheckpoint("truncated checkpoint");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b.data() + pos), n);
    pos += n;
    return s;
  }
  std::vector<float> f32s(size_t n) {
    need(n * 4);
    std::vector<float> v(n);
    std::memcpy(v.data(), b.data() + pos, n * 4);
    pos += n * 4;
    return v;
  }
};

}  // namespace

void save_container(const Container& c, const std::string& path) {
  std::vector<uint8_t> out;
  put_u32(out, kMagic);
  put_u32(out, kVersion);

  put_u32(out, static_cast<uint32_t>(c.config.size()));
  for (const auto& [k, v] : c.config) {
    put_str(out, k);
    put_str(out, v);
  }

  put_u32(out, static_cast<uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    put_str(out, name);
    put_u32(out, static_cast<uint32_t>(t.shape().size()));
    for (int d : t.shape()) put_u32(out, static_cast<uint32_t>(d));
    put_f32s(out, t.data());
  }

  put_u32(out, static_cast<uint32_t>(c.speakers.size()));
  for (const auto& [id, native] : c.speakers) {
    put_str(out, id);
    put_str(out, native);
  }

  put_u32(out, static_cast<uint32_t>(c.languages.size()));
  for (const auto& l : c.languages) put_str(out, l);

  put_u32(out, static_cast<uint32_t>(c.inventory_hashes.size()));
  for (const auto& [lang, hash] : c.inventory_hashes) {
    put_str(out, lang);
    put_u64(out, hash);
  }

  write_binary_file(path, out);
}

Container load_container(const std::string& path) {
  const auto bytes = read_binary_file(path);
  Reader r{bytes};
  if (r.u32() != kMagic) throw BadCheckpoint("bad magic in " + path);
  if (r.u32() != kVersion) throw BadCheckpoint("unsupported checkpoint version");

  Container c;
  const uint32_t n_cfg = r.u32();
  for (uint32_t i = 0; i < n_cfg; ++i) {
    std::string k = r.str();
    c.config[k] = r.str();
  }
  const uint32_t n_tensors = r.u32();
  for (uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const uint32_t nd = r.u32();
    std::vector<int> shape;
    size_t total = 1;
    for (uint32_t d = 0; d < nd; ++d) {
      shape.push_back(static_cast<int>(r.u32()));
      total *= static_cast<size_t>(shape.back());
    }
    c.tensors.emplace_back(std::move(name),
                           nn::Tensor::from(shape, r.f32s(total)));
  }
  const uint32_t n_spk = r.u32();
  for (uint32_t i = 0; i < n_spk; ++i) {
    std::string id = r.str();
    std::string native = r.str();
    c.speakers.emplace_back(std::move(id), std::move(native));
  }
  const uint32_t n_lang = r.u32();
  for (uint32_t i = 0; i < n_lang; ++i) c.languages.push_back(r.str());
  const uint32_t n_hash = r.u32();
  for (uint32_t i = 0; i < n_hash; ++i) {
    std::string lang = r.str();
    const uint64_t h = r.u64();
    c.inventory_hashes.emplace_back(std::move(lang), h);
  }
  return c;
}

}  // namespace polydub::ckpt

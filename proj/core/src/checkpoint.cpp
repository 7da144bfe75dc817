#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "senh/model.hpp"

namespace senh {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'N', 'H', 'M', 'D', 'L', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& s, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  s.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& s, uint64_t v) {
  put_u32(s, static_cast<uint32_t>(v & 0xffffffffu));
  put_u32(s, static_cast<uint32_t>(v >> 32));
}

void put_f32(std::ostream& s, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(s, bits);
}

uint32_t get_u32(std::istream& s) {
  unsigned char b[4];
  s.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint64_t get_u64(std::istream& s) {
  const uint64_t lo = get_u32(s);
  const uint64_t hi = get_u32(s);
  return lo | hi << 32;
}

float get_f32(std::istream& s) {
  const uint32_t bits = get_u32(s);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::string config_echo(const UNetConfig& cfg) {
  std::ostringstream out;
  out << "variant=" << to_string(cfg.variant) << "\n";
  out << "widths=";
  for (size_t i = 0; i < cfg.widths.size(); ++i)
    out << (i ? "," : "") << cfg.widths[i];
  out << "\nkernel=" << cfg.kernel << "\n";
  out << "aspp_factors=";
  for (size_t i = 0; i < cfg.aspp_factors.size(); ++i)
    out << (i ? "," : "") << cfg.aspp_factors[i];
  out << "\nactivation_slope=" << cfg.activation_slope << "\n";
  out << "sample_rate=" << cfg.sample_rate << "\n";
  return out.str();
}

std::vector<int64_t> parse_int_list(const std::string& s) {
  std::vector<int64_t> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoll(tok));
  return out;
}

UNetConfig parse_config_echo(const std::string& text) {
  UNetConfig cfg;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCategory::format, "checkpoint config echo: bad line " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "variant") cfg.variant = variant_from_string(val);
    else if (key == "widths") cfg.widths = parse_int_list(val);
    else if (key == "kernel") cfg.kernel = std::stoll(val);
    else if (key == "aspp_factors") cfg.aspp_factors = parse_int_list(val);
    else if (key == "activation_slope") cfg.activation_slope = std::stof(val);
    else if (key == "sample_rate") cfg.sample_rate = std::stoll(val);
    else
      throw Error(ErrorCategory::format, "checkpoint config echo: unknown key " + key);
  }
  return cfg;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCategory::io, "cannot create " + path);
  f.write(kMagic, 8);
  put_u32(f, kVersion);
  const std::string echo = config_echo(model.config());
  put_u32(f, static_cast<uint32_t>(echo.size()));
  f.write(echo.data(), static_cast<std::streamsize>(echo.size()));
  put_u32(f, static_cast<uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    put_u32(f, static_cast<uint32_t>(p.name.size()));
    f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u64(f, static_cast<uint64_t>(p.value.batch));
    put_u64(f, static_cast<uint64_t>(p.value.channels));
    put_u64(f, static_cast<uint64_t>(p.value.length));
    for (float x : p.value.v) put_f32(f, x);
  }
  if (!f) throw Error(ErrorCategory::io, "short write to " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCategory::io, "cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(ErrorCategory::format, path + ": not a model checkpoint");
  const uint32_t version = get_u32(f);
  if (version != kVersion)
    throw Error(ErrorCategory::format,
                path + ": unsupported checkpoint version " + std::to_string(version));
  const uint32_t echo_len = get_u32(f);
  std::string echo(echo_len, '\0');
  f.read(echo.data(), echo_len);
  if (!f) throw Error(ErrorCategory::format, path + ": truncated config echo");

  Model model = Model::build(parse_config_echo(echo), /*seed=*/0);
  std::unordered_map<std::string, Parameter<float>*> by_name;
  for (auto& p : model.params_) by_name[p.name] = &p;

  const uint32_t n_params = get_u32(f);
  if (n_params != model.params_.size())
    throw Error(ErrorCategory::format,
                path + ": parameter count mismatch (file " + std::to_string(n_params) +
                    ", model " + std::to_string(model.params_.size()) + ")");
  for (uint32_t i = 0; i < n_params; ++i) {
    const uint32_t name_len = get_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const int64_t b = static_cast<int64_t>(get_u64(f));
    const int64_t c = static_cast<int64_t>(get_u64(f));
    const int64_t l = static_cast<int64_t>(get_u64(f));
    if (!f) throw Error(ErrorCategory::format, path + ": truncated parameter header");
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw Error(ErrorCategory::format, path + ": unexpected parameter " + name);
    Parameter<float>& p = *it->second;
    if (p.value.batch != b || p.value.channels != c || p.value.length != l)
      throw Error(ErrorCategory::format, path + ": shape mismatch for " + name);
    for (auto& x : p.value.v) x = get_f32(f);
    if (!f) throw Error(ErrorCategory::format, path + ": truncated parameter data");
  }
  return model;
}

}  // namespace senh

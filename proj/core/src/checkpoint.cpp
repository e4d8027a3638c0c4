#include "sdmae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "sdmae/error.hpp"

namespace fs = std::filesystem;

namespace sdmae {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'M', 'A', 'E', 'P', 'B', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw IoError("checkpoint: truncated params.bin");
  return v;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

void save_checkpoint(const fs::path& dir, const ModelParams& params) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create checkpoint directory " + dir.string());

  std::ofstream bin(dir / "params.bin", std::ios::binary);
  if (!bin) throw IoError("cannot write " + (dir / "params.bin").string());
  bin.write(kMagic, sizeof(kMagic));
  std::uint32_t count = 0;
  visit_parameters(params, [&](const std::string&, const Tensor&, ParamGroup) { ++count; });
  put_u32(bin, count);
  visit_parameters(params, [&](const std::string& name, const Tensor& t, ParamGroup) {
    put_u32(bin, static_cast<std::uint32_t>(name.size()));
    bin.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(bin, static_cast<std::uint32_t>(t.rows()));
    put_u32(bin, static_cast<std::uint32_t>(t.cols()));
    bin.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  });
  if (!bin) throw IoError("failed writing " + (dir / "params.bin").string());

  std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.txt").string());
  manifest << "format_version = " << kCheckpointFormatVersion << "\n"
           << "config_fingerprint = " << hex(params.fingerprint) << "\n"
           << "stage = " << to_string(params.stage) << "\n"
           << "seed = " << params.seed << "\n"
           << "parameters = " << count_parameters(params) << "\n";
}

ModelParams load_checkpoint(const fs::path& dir, const ExperimentConfig& cfg) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("missing checkpoint manifest in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(manifest, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (kv["format_version"] != std::to_string(kCheckpointFormatVersion))
    throw IoError("checkpoint " + dir.string() + ": unsupported format version '" +
                  kv["format_version"] + "'");
  const std::uint64_t expected = config_fingerprint(cfg);
  if (kv["config_fingerprint"] != hex(expected))
    throw ConfigError("checkpoint " + dir.string() + " was trained with a different configuration (fingerprint " +
                      kv["config_fingerprint"] + ", expected " + hex(expected) + ")");

  ModelParams params = allocate_model(cfg);
  params.stage = parse_stage(kv["stage"]);
  params.seed = std::stoull(kv["seed"]);

  std::ifstream bin(dir / "params.bin", std::ios::binary);
  if (!bin) throw IoError("missing params.bin in " + dir.string());
  char magic[8];
  bin.read(magic, sizeof(magic));
  if (!bin || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("checkpoint " + dir.string() + ": bad magic");
  const std::uint32_t count = get_u32(bin);

  std::map<std::string, Tensor*> slots;
  visit_parameters(params, [&](const std::string& name, Tensor& t, ParamGroup) { slots[name] = &t; });
  if (count != slots.size())
    throw IoError("checkpoint " + dir.string() + ": " + std::to_string(count) +
                  " arrays, expected " + std::to_string(slots.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(bin);
    std::string name(len, '\0');
    bin.read(name.data(), len);
    const std::uint32_t rows = get_u32(bin);
    const std::uint32_t cols = get_u32(bin);
    const auto it = slots.find(name);
    if (it == slots.end()) throw IoError("checkpoint: unexpected array '" + name + "'");
    Tensor& t = *it->second;
    if (t.rows() != rows || t.cols() != cols)
      throw IoError("checkpoint: array '" + name + "' has shape " + std::to_string(rows) + "x" +
                    std::to_string(cols));
    bin.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!bin) throw IoError("checkpoint: truncated array '" + name + "'");
  }
  return params;
}

}  // namespace sdmae

#include "sdmae/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "sdmae/error.hpp"
#include "sdmae/rng.hpp"

namespace sdmae {

std::string_view to_string(ScoreStrategy s) {
  switch (s) {
    case ScoreStrategy::T: return "T";
    case ScoreStrategy::T_S: return "T_S";
    case ScoreStrategy::T_TSD: return "T_TSD";
    case ScoreStrategy::T_S_TSD: return "T_S_TSD";
  }
  return "?";
}

ScoreStrategy parse_strategy(std::string_view text) {
  if (text == "T") return ScoreStrategy::T;
  if (text == "T_S") return ScoreStrategy::T_S;
  if (text == "T_TSD") return ScoreStrategy::T_TSD;
  if (text == "T_S_TSD") return ScoreStrategy::T_S_TSD;
  throw ParseError("score_strategy: expected one of T, T_S, T_TSD, T_S_TSD, got '" +
                   std::string(text) + "'");
}

bool uses_student(ScoreStrategy s) { return s != ScoreStrategy::T; }

int ExperimentConfig::visible_count(double ratio) const {
  const int n = token_count();
  return n - static_cast<int>(std::lround(ratio * n));
}

ExperimentConfig full_defaults() { return ExperimentConfig{}; }

ExperimentConfig toy_preset() {
  ExperimentConfig cfg;
  cfg.frame_height = 64;
  cfg.frame_width = 64;
  cfg.patch_size = 8;
  cfg.channels = 1;
  cfg.encoder_dim = 64;
  cfg.decoder_dim = 32;
  cfg.teacher_epochs = 10;
  cfg.student_epochs = 4;
  cfg.batch_size = 16;
  return cfg;
}

ExperimentConfig preset(std::string_view name) {
  if (name == "full") return full_defaults();
  if (name == "toy") return toy_preset();
  throw ConfigError("preset: unknown preset '" + std::string(name) + "' (expected full or toy)");
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void type_error(std::string_view key, std::string_view expected,
                             std::string_view value) {
  throw ParseError(std::string(key) + ": expected " + std::string(expected) + ", got '" +
                   std::string(value) + "'");
}

long long parse_integer(std::string_view key, std::string_view value) {
  long long out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) type_error(key, "integer", value);
  return out;
}

int parse_int(std::string_view key, std::string_view value) {
  const long long v = parse_integer(key, value);
  if (v < INT32_MIN || v > INT32_MAX) type_error(key, "32-bit integer", value);
  return static_cast<int>(v);
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string text(value);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno != 0 || !std::isfinite(v))
    type_error(key, "real", value);
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  std::string v(value);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  type_error(key, "boolean", value);
}

std::array<int, 3> parse_triple(std::string_view key, std::string_view value) {
  std::array<int, 3> out{};
  std::string text(value);
  std::replace(text.begin(), text.end(), 'x', ',');
  std::stringstream ss(text);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 3) type_error(key, "integer triple t,h,w", value);
    out[i++] = parse_int(key, trim(part));
  }
  if (i != 3) type_error(key, "integer triple t,h,w", value);
  return out;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct KeySpec {
  std::string_view key;
  std::string_view doc;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SDMAE_INT_KEY(name, doc)                                                           \
  KeySpec {                                                                                \
    #name, doc, [](ExperimentConfig& c, std::string_view v) { c.name = parse_int(#name, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }                   \
  }
#define SDMAE_REAL_KEY(name, doc)                                                              \
  KeySpec {                                                                                    \
    #name, doc, [](ExperimentConfig& c, std::string_view v) { c.name = parse_real(#name, v); }, \
        [](const ExperimentConfig& c) { return format_real(c.name); }                          \
  }
#define SDMAE_BOOL_KEY(name, doc)                                                              \
  KeySpec {                                                                                    \
    #name, doc, [](ExperimentConfig& c, std::string_view v) { c.name = parse_bool(#name, v); }, \
        [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); }       \
  }

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      SDMAE_INT_KEY(patch_size, "token side length d in pixels"),
      SDMAE_INT_KEY(frame_height, "frame height h after resizing; multiple of patch_size"),
      SDMAE_INT_KEY(frame_width, "frame width w after resizing; multiple of patch_size"),
      SDMAE_INT_KEY(channels, "input channels c (1 = grayscale, 3 = RGB)"),
      SDMAE_REAL_KEY(mask_ratio, "fraction of tokens removed before the encoder, in [0,1)"),
      SDMAE_INT_KEY(encoder_blocks, "transformer blocks in the shared encoder"),
      SDMAE_INT_KEY(encoder_dim, "encoder embedding width"),
      SDMAE_INT_KEY(teacher_decoder_blocks, "transformer blocks in the teacher decoder"),
      SDMAE_INT_KEY(student_decoder_blocks, "transformer blocks in the student decoder"),
      SDMAE_INT_KEY(decoder_dim, "decoder embedding width"),
      SDMAE_INT_KEY(attention_heads, "attention heads per block"),
      SDMAE_INT_KEY(mlp_ratio, "hidden width multiplier of the pointwise feed-forward stage"),
      SDMAE_BOOL_KEY(predict_anomaly_map, "append an anomaly-map channel to the outputs"),
      SDMAE_BOOL_KEY(use_motion_weights, "weight tokens by motion gradients (false = uniform)"),
      SDMAE_BOOL_KEY(loss_on_masked_only, "restrict the reconstruction loss to masked tokens"),
      SDMAE_REAL_KEY(augment_probability, "probability of compositing a synthetic event onto a frame"),
      SDMAE_REAL_KEY(learning_rate, "Adam step size"),
      SDMAE_INT_KEY(batch_size, "frames per mini-batch"),
      SDMAE_INT_KEY(teacher_epochs, "epochs of stage 1 (teacher)"),
      SDMAE_INT_KEY(student_epochs, "epochs of stage 2 (student, frozen backbone)"),
      KeySpec{"score_strategy", "T | T_S | T_TSD | T_S_TSD",
              [](ExperimentConfig& c, std::string_view v) { c.score_strategy = parse_strategy(v); },
              [](const ExperimentConfig& c) { return std::string(to_string(c.score_strategy)); }},
      KeySpec{"smooth_kernel", "odd 3-D mean filter size t,h,w",
              [](ExperimentConfig& c, std::string_view v) {
                c.smooth_kernel = parse_triple("smooth_kernel", v);
              },
              [](const ExperimentConfig& c) {
                return std::to_string(c.smooth_kernel[0]) + "," +
                       std::to_string(c.smooth_kernel[1]) + "," +
                       std::to_string(c.smooth_kernel[2]);
              }},
      SDMAE_REAL_KEY(gaussian_sigma, "std of the temporal Gaussian over frame scores"),
      SDMAE_REAL_KEY(inference_mask_ratio, "masking ratio at scoring time (defaults to mask_ratio)"),
      KeySpec{"seed", "base seed for every random stream",
              [](ExperimentConfig& c, std::string_view v) {
                std::uint64_t s = 0;
                const auto* end = v.data() + v.size();
                const auto [ptr, ec] = std::from_chars(v.data(), end, s);
                if (ec != std::errc{} || ptr != end) type_error("seed", "non-negative 64-bit integer", v);
                c.seed = s;
              },
              [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
  };
  return specs;
}

#undef SDMAE_INT_KEY
#undef SDMAE_REAL_KEY
#undef SDMAE_BOOL_KEY

const KeySpec* find_key(std::string_view key) {
  for (const auto& spec : key_specs())
    if (spec.key == key) return &spec;
  return nullptr;
}

// Entries gathered from one source, in order of appearance.
using Entries = std::vector<Override>;

Entries parse_entries(std::string_view text, std::string_view source) {
  Entries out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError(std::string(source) + ":" + std::to_string(lineno) +
                       ": expected 'key = value', got '" + body + "'");
    out.emplace_back(trim(std::string_view(body).substr(0, eq)),
                     trim(std::string_view(body).substr(eq + 1)));
  }
  return out;
}

Entries environment_entries() {
  Entries out;
  for (const auto& spec : key_specs()) {
    std::string name(kEnvPrefix);
    for (char ch : spec.key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = std::getenv(name.c_str())) out.emplace_back(std::string(spec.key), trim(v));
  }
  if (const char* v = std::getenv("SDMAE_PRESET")) out.emplace_back("preset", trim(v));
  return out;
}

ExperimentConfig resolve(const std::vector<Entries>& sources) {
  // The last preset named anywhere picks the base defaults.
  std::string preset_name = "full";
  for (const auto& src : sources)
    for (const auto& [k, v] : src)
      if (k == "preset") preset_name = v;
  ExperimentConfig cfg = preset(preset_name);

  bool explicit_inference_ratio = false;
  for (const auto& src : sources) {
    for (const auto& [k, v] : src) {
      if (k == "preset") continue;
      const KeySpec* spec = find_key(k);
      if (spec == nullptr) throw ParseError(k + ": unknown configuration key");
      spec->set(cfg, v);
      if (k == "inference_mask_ratio") explicit_inference_ratio = true;
    }
  }
  if (!explicit_inference_ratio) cfg.inference_mask_ratio = cfg.mask_ratio;
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void invalid(std::string_view field, std::string_view rule) {
  throw ConfigError(std::string(field) + ": " + std::string(rule));
}

}  // namespace

const ExperimentConfig& validate_config(const ExperimentConfig& cfg) {
  if (cfg.patch_size < 1) invalid("patch_size", "must be >= 1");
  if (cfg.frame_height < 1) invalid("frame_height", "must be >= 1");
  if (cfg.frame_width < 1) invalid("frame_width", "must be >= 1");
  if (cfg.frame_height % cfg.patch_size != 0)
    invalid("frame_height", "h not divisible by d (" + std::to_string(cfg.frame_height) + " % " +
                                std::to_string(cfg.patch_size) + " != 0)");
  if (cfg.frame_width % cfg.patch_size != 0)
    invalid("frame_width", "w not divisible by d (" + std::to_string(cfg.frame_width) + " % " +
                               std::to_string(cfg.patch_size) + " != 0)");
  if (cfg.channels < 1) invalid("channels", "must be >= 1");
  if (!(cfg.mask_ratio >= 0.0 && cfg.mask_ratio < 1.0)) invalid("mask_ratio", "must lie in [0, 1)");
  if (cfg.visible_count(cfg.mask_ratio) < 1)
    invalid("mask_ratio", "leaves no visible token");
  if (!(cfg.inference_mask_ratio >= 0.0 && cfg.inference_mask_ratio < 1.0))
    invalid("inference_mask_ratio", "must lie in [0, 1)");
  if (cfg.visible_count(cfg.inference_mask_ratio) < 1)
    invalid("inference_mask_ratio", "leaves no visible token");
  if (cfg.encoder_blocks < 1) invalid("encoder_blocks", "must be >= 1");
  if (cfg.teacher_decoder_blocks < 1) invalid("teacher_decoder_blocks", "must be >= 1");
  if (cfg.student_decoder_blocks < 1) invalid("student_decoder_blocks", "must be >= 1");
  if (cfg.attention_heads < 1) invalid("attention_heads", "must be >= 1");
  if (cfg.encoder_dim < 1 || cfg.encoder_dim % cfg.attention_heads != 0)
    invalid("encoder_dim", "must be a positive multiple of attention_heads");
  if (cfg.decoder_dim < 1 || cfg.decoder_dim % cfg.attention_heads != 0)
    invalid("decoder_dim", "must be a positive multiple of attention_heads");
  if (cfg.mlp_ratio < 1) invalid("mlp_ratio", "must be >= 1");
  if (!(cfg.augment_probability >= 0.0 && cfg.augment_probability <= 1.0))
    invalid("augment_probability", "must lie in [0, 1]");
  if (!(cfg.learning_rate > 0.0)) invalid("learning_rate", "must be positive");
  if (cfg.batch_size < 1) invalid("batch_size", "must be >= 1");
  if (cfg.teacher_epochs < 0) invalid("teacher_epochs", "must be >= 0");
  if (cfg.student_epochs < 0) invalid("student_epochs", "must be >= 0");
  for (int v : cfg.smooth_kernel)
    if (v < 1 || v % 2 == 0) invalid("smooth_kernel", "entries must be odd and >= 1");
  if (!(cfg.gaussian_sigma > 0.0)) invalid("gaussian_sigma", "must be positive");
  return cfg;
}

Override parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ParseError("override '" + std::string(text) + "': expected key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

ExperimentConfig parse_config(std::string_view text, const std::vector<Override>& overrides) {
  ExperimentConfig cfg = resolve({parse_entries(text, "<config>"), overrides});
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<Override>& overrides, bool read_environment) {
  std::vector<Entries> sources;
  if (read_environment) sources.push_back(environment_entries());
  if (!path.empty()) {
    if (!std::filesystem::exists(path))
      throw ConfigError("configuration file not found: " + path.string());
    sources.push_back(parse_entries(read_file(path), path.string()));
  }
  sources.push_back(overrides);
  ExperimentConfig cfg = resolve(sources);
  validate_config(cfg);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# sdmae experiment configuration\n";
  for (const auto& spec : key_specs()) os << spec.key << " = " << spec.get(cfg) << "\n";
  return os.str();
}

const std::vector<ConfigKeyDoc>& config_key_docs() {
  static const std::vector<ConfigKeyDoc> docs = [] {
    std::vector<ConfigKeyDoc> out;
    for (const auto& spec : key_specs()) out.push_back({spec.key, spec.doc});
    return out;
  }();
  return docs;
}

std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << cfg.patch_size << '|' << cfg.frame_height << '|' << cfg.frame_width << '|'
     << cfg.channels << '|' << cfg.encoder_blocks << '|' << cfg.encoder_dim << '|'
     << cfg.teacher_decoder_blocks << '|' << cfg.student_decoder_blocks << '|'
     << cfg.decoder_dim << '|' << cfg.attention_heads << '|' << cfg.mlp_ratio << '|'
     << cfg.predict_anomaly_map;
  return fnv1a(os.str());
}

}  // namespace sdmae

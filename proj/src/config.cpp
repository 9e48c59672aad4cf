#include "tmd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

#include "tmd/errors.hpp"
#include "tmd/format.hpp"
#include "tmd/rng.hpp"

namespace tmd {

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::validate_generator, "validate-generator"},
    {ExperimentKind::train_classifier, "train-classifier"},
    {ExperimentKind::train_pointset, "train-pointset"},
    {ExperimentKind::segment, "segment"},
    {ExperimentKind::gradcheck, "gradcheck"},
    {ExperimentKind::dump_operator, "dump-operator"},
};

using T = ValueType;

ConfigKey seed_key() { return {"seed", T::integer, "0", "global seed for every random stream"}; }
ConfigKey latent_key() { return {"latent_dim", T::integer, "16", "latent dimension of the kernel projection"}; }

std::vector<ConfigKey> model_keys(const char* epochs, const char* batch, const char* lr) {
  return {
      seed_key(),
      latent_key(),
      {"epsilon", T::bandwidth, "median", "kernel bandwidth: 'median' or a positive number"},
      {"freeze_delta_t", T::boolean, "false", "keep delta_t at its initial value"},
      {"delta_t_init", T::real, "0", "initial delta_t"},
      {"use_tmd", T::boolean, "true", "wrap the hidden blocks as TMD layers"},
      {"hidden", T::integer, "32", "hidden width"},
      {"blocks", T::integer, "1", "number of hidden blocks"},
      {"epochs", T::integer, epochs, "training epochs"},
      {"batch_size", T::integer, batch, "minibatch size"},
      {"learning_rate", T::real, lr, "SGD learning rate"},
      {"momentum", T::real, "0.9", "SGD momentum"},
  };
}

std::vector<ConfigKey> build_schema(ExperimentKind kind) {
  std::vector<ConfigKey> keys;
  switch (kind) {
    case ExperimentKind::validate_generator:
      keys = {
          seed_key(),
          {"target", T::text, "gaussian1d", "target density", {"gaussian1d", "gaussian2d", "mixture1d"}},
          {"test_function", T::text, "quadratic", "test function f", {"constant", "quadratic", "coordinate", "cosine"}},
          {"m_grid", T::integer_list, "100,2000", "sample sizes"},
          {"epsilon_grid", T::real_list, "0.05", "bandwidths"},
          {"seeds", T::integer_list, "0,1,2,3,4,5,6,7,8,9", "trial seeds, offset by seed"},
      };
      break;
    case ExperimentKind::train_classifier:
      keys = model_keys("20", "32", "0.5");
      keys.insert(keys.end(), {
                                  {"dataset", T::text, "two_moons", "synthetic dataset", {"two_moons", "blobs"}},
                                  {"n_train", T::integer, "200", "training rows"},
                                  {"n_test", T::integer, "500", "test rows"},
                                  {"data_noise", T::real, "0.1", "noise of the generated data"},
                                  {"test_noise", T::real_list, "0.2,0.3", "extra input noise levels at test time"},
                                  {"m_infer", T::integer, "50", "rows per generator at evaluation"},
                              });
      break;
    case ExperimentKind::train_pointset:
      keys = model_keys("40", "16", "0.03");
      keys.insert(keys.end(), {
                                  {"n_train", T::integer, "150", "training clouds"},
                                  {"n_test", T::integer, "60", "test clouds"},
                                  {"points", T::integer, "64", "points per cloud"},
                                  {"jitter", T::real, "0.02", "point jitter"},
                              });
      break;
    case ExperimentKind::segment:
      keys = {
          seed_key(),
          latent_key(),
          {"epsilon", T::bandwidth, "10", "kernel bandwidth: 'median' or a positive number"},
          {"delta_t", T::real, "0.005", "TMD step"},
          {"use_tmd", T::boolean, "true", "couple the batch through the TMD correction"},
          {"images", T::integer, "8", "images per batch"},
          {"size", T::integer, "32", "image side, a multiple of 16"},
          {"noise", T::real, "0.2", "additive Gaussian noise"},
          {"steps", T::integer, "80", "evolution steps"},
          {"mu", T::real, "0.1", "length weight"},
          {"nu", T::real, "0", "area weight"},
          {"lambda1", T::real, "1", "foreground weight"},
          {"lambda2", T::real, "1", "background weight"},
          {"eta", T::real, "1", "Heaviside width"},
          {"contour_step", T::real, "10", "level-set step"},
      };
      break;
    case ExperimentKind::gradcheck:
      keys = {
          seed_key(),
          {"latent_dim", T::integer, "4", "latent dimension of the kernel projection"},
          {"cases", T::integer, "20", "random cases"},
          {"rows", T::integer, "6", "rows per case"},
          {"input_dim", T::integer, "3", "feature width"},
          {"head_hidden", T::integer, "4", "hidden width of the density head, 0 for linear"},
          {"tolerance", T::real, "1e-4", "relative error bound"},
      };
      break;
    case ExperimentKind::dump_operator:
      keys = {
          seed_key(),
          {"epsilon", T::bandwidth, "median", "kernel bandwidth: 'median' or a positive number"},
          {"rows", T::integer, "8", "sample points"},
          {"input_dim", T::integer, "2", "point dimension"},
      };
      break;
  }
  std::sort(keys.begin(), keys.end(), [](const ConfigKey& a, const ConfigKey& b) { return a.name < b.name; });
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

std::string canonical_value(const ConfigKey& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto fail = [&](const std::string& why) { return ConfigError(key.name, why + ", got '" + v + "'"); };
  switch (key.type) {
    case T::integer: {
      std::uint64_t x;
      if (!parse_u64(v, x)) throw fail("expected a non-negative integer");
      return std::to_string(x);
    }
    case T::real: {
      double x;
      if (!parse_real(v, x)) throw fail("expected a finite number");
      return fmt17(x);
    }
    case T::boolean:
      if (v == "true" || v == "1" || v == "yes") return "true";
      if (v == "false" || v == "0" || v == "no") return "false";
      throw fail("expected true or false");
    case T::text:
      if (!key.choices.empty() && std::find(key.choices.begin(), key.choices.end(), v) == key.choices.end()) {
        std::string all;
        for (const auto& c : key.choices) all += (all.empty() ? "" : "|") + c;
        throw fail("expected one of " + all);
      }
      return v;
    case T::bandwidth: {
      if (v == "median") return v;
      double x;
      if (!parse_real(v, x) || !(x > 0.0)) throw fail("expected 'median' or a positive number");
      return fmt17(x);
    }
    case T::integer_list:
    case T::real_list: {
      std::string out;
      const auto items = split_list(v);
      if (items.empty()) throw fail("expected a comma-separated list");
      for (const auto& item : items) {
        std::string c;
        if (key.type == T::integer_list) {
          std::uint64_t x;
          if (!parse_u64(item, x)) throw fail("expected integers");
          c = std::to_string(x);
        } else {
          double x;
          if (!parse_real(item, x)) throw fail("expected numbers");
          c = fmt17(x);
        }
        out += (out.empty() ? "" : ",") + c;
      }
      return out;
    }
  }
  return v;
}

// Range checks that need the whole config.
void check_ranges(const ExperimentConfig& c) {
  auto positive = [&](const char* key) {
    if (c.values().count(key) && c.integer(key) == 0) throw ConfigError(key, "must be at least 1");
  };
  for (const char* key : {"latent_dim", "hidden", "batch_size", "n_train", "n_test", "m_infer",
                          "points", "images", "size", "cases", "rows", "input_dim"}) {
    positive(key);
  }
  if (c.values().count("size") && c.size("size") % 16 != 0) throw ConfigError("size", "must be a multiple of 16");
  if (c.values().count("m_grid")) {
    for (auto m : c.integers("m_grid")) {
      if (m < 10) throw ConfigError("m_grid", "sample sizes must be at least 10");
    }
  }
  if (c.values().count("epsilon_grid")) {
    for (double e : c.reals("epsilon_grid")) {
      if (!(e > 0.0)) throw ConfigError("epsilon_grid", "bandwidths must be positive");
    }
  }
  for (const char* key : {"eta", "contour_step", "learning_rate", "tolerance"}) {
    if (c.values().count(key) && !(c.real(key) > 0.0)) throw ConfigError(key, "must be positive");
  }
  for (const char* key : {"noise", "jitter", "data_noise", "momentum"}) {
    if (c.values().count(key) && c.real(key) < 0.0) throw ConfigError(key, "must be non-negative");
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (name == k.name) return k.kind;
  }
  throw ConfigError("kind", "unknown experiment '" + std::string(name) + "'");
}

const std::vector<ExperimentKind>& all_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> out;
    for (const auto& k : kKindNames) out.push_back(k.kind);
    return out;
  }();
  return kinds;
}

const std::vector<ConfigKey>& config_schema(ExperimentKind kind) {
  static const std::map<ExperimentKind, std::vector<ConfigKey>> schemas = [] {
    std::map<ExperimentKind, std::vector<ConfigKey>> out;
    for (const auto& k : kKindNames) out[k.kind] = build_schema(k.kind);
    return out;
  }();
  return schemas.at(kind);
}

ExperimentConfig::ExperimentConfig(ExperimentKind kind) : kind_(kind) {
  for (const auto& key : config_schema(kind)) values_[key.name] = canonical_value(key, key.default_value);
}

const ConfigKey& ExperimentConfig::key_info(const std::string& key) const {
  for (const auto& k : config_schema(kind_)) {
    if (k.name == key) return k;
  }
  throw UnknownKey("'" + key + "' is not a " + to_string(kind_) + " setting");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const std::string canon = canonical_value(key_info(key), value);
  const std::string previous = values_[key];
  values_[key] = canon;
  try {
    check_ranges(*this);
  } catch (...) {
    values_[key] = previous;
    throw;
  }
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  key_info(key);
  return values_.at(key);
}

double ExperimentConfig::real(const std::string& key) const { return std::stod(text(key)); }

std::uint64_t ExperimentConfig::integer(const std::string& key) const { return std::stoull(text(key)); }

bool ExperimentConfig::flag(const std::string& key) const { return text(key) == "true"; }

std::vector<std::uint64_t> ExperimentConfig::integers(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& s : split_list(text(key))) out.push_back(std::stoull(s));
  return out;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(text(key))) out.push_back(std::stod(s));
  return out;
}

double ExperimentConfig::bandwidth(const std::string& key) const {
  const std::string& v = text(key);
  return v == "median" ? 0.0 : std::stod(v);
}

std::string ExperimentConfig::canonical() const {
  std::string out = "kind = " + to_string(kind_) + "\n";
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

ExperimentConfig parse_config(ExperimentKind kind, std::istream& in) {
  ExperimentConfig config(kind);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number), "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "kind") {
      if (value != to_string(kind)) throw ConfigError("kind", "file is for '" + value + "'");
      continue;
    }
    config.set(key, value);
  }
  return config;
}

ExperimentConfig parse_config(ExperimentKind kind, std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(kind, in);
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace tmd

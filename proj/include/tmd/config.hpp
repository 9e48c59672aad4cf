#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tmd {

enum class ExperimentKind { validate_generator, train_classifier, train_pointset, segment, gradcheck, dump_operator };

/// Subcommand spelling, e.g. "train-classifier".
std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(std::string_view name);
const std::vector<ExperimentKind>& all_kinds();

enum class ValueType { integer, real, boolean, text, bandwidth, integer_list, real_list };

struct ConfigKey {
  std::string name;
  ValueType type;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices = {};  // text keys only
};

const std::vector<ConfigKey>& config_schema(ExperimentKind kind);

/// Flat key/value settings for one experiment, every key of the kind's schema
/// present. Values are kept in canonical spelling.
class ExperimentConfig {
 public:
  explicit ExperimentConfig(ExperimentKind kind);

  ExperimentKind kind() const noexcept { return kind_; }

  /// UnknownKey for keys outside the schema; ConfigError naming the key when
  /// the value does not parse or violates its constraint.
  void set(const std::string& key, const std::string& value);

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;
  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(integer(key)); }
  bool flag(const std::string& key) const;
  std::vector<std::uint64_t> integers(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  /// 0 means the median heuristic.
  double bandwidth(const std::string& key) const;

  /// `kind = ...` followed by `key = value` lines in key order.
  std::string canonical() const;
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  const ConfigKey& key_info(const std::string& key) const;

  ExperimentKind kind_;
  std::map<std::string, std::string> values_;
};

/// Reads `key = value` lines; blank lines and `#` comments are skipped. A
/// `kind` line must match `kind`.
ExperimentConfig parse_config(ExperimentKind kind, std::istream& in);
ExperimentConfig parse_config(ExperimentKind kind, std::string_view text);

std::string hex64(std::uint64_t v);

}  // namespace tmd

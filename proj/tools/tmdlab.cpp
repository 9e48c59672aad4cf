#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tmd/config.hpp"
#include "tmd/errors.hpp"
#include "tmd/experiments.hpp"

namespace fs = std::filesystem;
using tmd::ExperimentConfig;
using tmd::ExperimentKind;

namespace {

struct Invocation {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::map<std::string, std::string> overrides;  // key -> value from flags
};

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s) {
    if (c == '_') c = '-';
  }
  return "--" + s;
}

ExperimentConfig effective_config(ExperimentKind kind, const Invocation& inv) {
  ExperimentConfig config(kind);
  if (!inv.config_path.empty()) {
    std::ifstream in(inv.config_path);
    if (!in) throw tmd::ConfigError("config", "cannot read " + inv.config_path);
    config = tmd::parse_config(kind, in);
  }
  for (const auto& [key, value] : inv.overrides) config.set(key, value);
  if (inv.seed) config.set("seed", std::to_string(*inv.seed));
  return config;
}

fs::path run_directory(ExperimentKind kind, const Invocation& inv, const std::string& tag) {
  if (!inv.out_dir.empty()) return inv.out_dir;
  const char* root = std::getenv("TMDLAB_OUT");
  return fs::path(root && *root ? root : "runs") / (tmd::to_string(kind) + "-" + tag);
}

void write_manifest(const fs::path& dir, const std::string& hash, double seconds, const std::vector<std::string>& files,
                    const std::string& status, std::optional<double> overhead) {
  fs::create_directories(dir);
  std::ofstream m(dir / "manifest.txt");
  m << "config_hash " << hash << "\n";
  m << "version " << tmd::kArtifactVersion << "\n";
  m << "status " << status << "\n";
  m << "duration_seconds " << seconds << "\n";
  if (overhead) m << "tmd_overhead_fraction " << *overhead << "\n";
  m << "files " << files.size() << "\n";
  for (const auto& f : files) m << "  " << f << "\n";
}

int execute(ExperimentKind kind, const Invocation& inv) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  std::optional<ExperimentConfig> config;
  std::string hash = "unknown";
  fs::path dir;
  try {
    config = effective_config(kind, inv);
    hash = tmd::hex64(config->hash());
    dir = run_directory(kind, inv, hash.substr(0, 8));
    const tmd::RunOutput out = tmd::run_experiment(*config, dir);
    write_manifest(dir, hash, elapsed(), out.files, out.passed ? "ok" : "failed", out.tmd_overhead);
    std::cout << tmd::to_string(kind) << ": " << out.summary << "\n";
    if (out.tmd_overhead) std::cout << "tmd overhead " << *out.tmd_overhead * 100.0 << "% per step\n";
    std::cout << "outputs in " << dir.string() << "\n";
    return out.passed ? 0 : 1;
  } catch (const std::exception& e) {
    nlohmann::json record = {{"kind", "Error"}, {"message", e.what()}, {"config_hash", hash}};
    if (const auto* err = dynamic_cast<const tmd::Error*>(&e)) record["kind"] = err->kind();
    if (const auto* err = dynamic_cast<const tmd::ConfigError*>(&e)) record["field"] = err->field();
    if (const auto* err = dynamic_cast<const tmd::NonFiniteLoss*>(&e)) record["step"] = err->step();
    if (dir.empty()) dir = run_directory(kind, inv, "failed");
    std::vector<std::string> files;
    try {
      fs::create_directories(dir);
      std::ofstream(dir / "error.json") << record.dump(2) << "\n";
      files.push_back("error.json");
      write_manifest(dir, hash, elapsed(), files, "error", std::nullopt);
    } catch (const std::exception&) {
    }
    std::cerr << record.dump() << "\n";
    return dynamic_cast<const tmd::ConfigError*>(&e) || dynamic_cast<const tmd::UnknownKey*>(&e) ? 2 : 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transductive diffusion (TMD) layer experiments"};
  app.require_subcommand(1);
  Invocation inv;
  struct FlagSlot {
    std::string value;
    CLI::Option* option = nullptr;
  };
  std::map<ExperimentKind, std::map<std::string, FlagSlot>> flags;
  std::map<ExperimentKind, CLI::App*> subs;

  for (ExperimentKind kind : tmd::all_kinds()) {
    const std::string name = tmd::to_string(kind);
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    subs[kind] = sub;
    sub->add_option("--config", inv.config_path, "flat 'key = value' config file")->check(CLI::ExistingFile);
    sub->add_option("--out", inv.out_dir, "output directory (default $TMDLAB_OUT/<kind>-<hash>, else runs/<kind>-<hash>)");
    for (const auto& key : tmd::config_schema(kind)) {
      if (key.name == "seed") {
        sub->add_option_function<std::uint64_t>(
            "--seed", [&inv](const std::uint64_t& s) { inv.seed = s; }, "global seed (default 0)");
        continue;
      }
      FlagSlot& slot = flags[kind][key.name];
      slot.option = sub->add_option(flag_name(key.name), slot.value, key.help + " (default " + key.default_value + ")");
    }
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [kind, sub] : subs) {
    if (!sub->parsed()) continue;
    for (const auto& [key, slot] : flags[kind]) {
      if (slot.option->count() > 0) inv.overrides[key] = slot.value;
    }
    return execute(kind, inv);
  }
  return 2;
}

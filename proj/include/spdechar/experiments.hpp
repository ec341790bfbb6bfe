#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spdechar::experiments {

/// Flat key=value configuration ('#' starts a comment). Unknown keys and
/// non-positive numeric parameters are rejected with the field named.
class ExperimentConfig {
 public:
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_text(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t seed() const;  // SPDECHAR_SEED env wins over the config value
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value);
  void validate() const;

 private:
  std::map<std::string, std::string> kv_;
};

struct CheckRecord {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
  int criterion = 0;  // acceptance criterion this check belongs to (0 = extra)
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckRecord> checks;

  bool overall() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

const std::vector<std::string>& suite_names();  // without "all"

/// Execute a named suite (or "all"), write its CSV artifacts plus
/// summary.txt under outdir, and return the check records.
SuiteReport run_suite(const std::string& name, const ExperimentConfig& cfg,
                      const std::string& outdir, int threads = 0);

std::string describe(const std::string& name);

}  // namespace spdechar::experiments

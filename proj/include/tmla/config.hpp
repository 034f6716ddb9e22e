#pragma once

#include <map>
#include <string>
#include <vector>

#include "tmla/attack.hpp"
#include "tmla/codec.hpp"
#include "tmla/defense.hpp"

namespace tmla {

// Flat key=value store with dotted section prefixes, e.g. "attack.delta=0.03".
// Lines starting with '#' and blank lines are ignored.
struct KeyValueConfig {
  std::map<std::string, std::string> values;

  static KeyValueConfig from_file(const std::string& path);
  void set_line(const std::string& line);  // "key=value"
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

// Typed views over the store. Unknown keys under a known section are an
// error so typos fail loudly; all complaints are gathered into one message.
AttackConfig parse_attack_config(const KeyValueConfig& kv);
SurrogateCodecParams parse_codec_config(const KeyValueConfig& kv);
DefenseConfig parse_defense_config(const KeyValueConfig& kv);

// Fully-resolved round-trips for provenance records.
KeyValueConfig render_config(const AttackConfig& a, const SurrogateCodecParams& c);
KeyValueConfig render_config(const DefenseConfig& d, const SurrogateCodecParams& c);

std::vector<std::string> load_manifest(const std::string& path);

inline constexpr const char* kToolVersion = "tmla 1.0.0";

}  // namespace tmla

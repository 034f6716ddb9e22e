#include "tmla/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tmla/analysis.hpp"

namespace tmla {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot read " + path);
  KeyValueConfig kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      kv.set_line(t);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kv;
}

void KeyValueConfig::set_line(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + line + "'");
  set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw std::invalid_argument("empty config key");
  values[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const { return values.count(key) > 0; }

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + it->second + "'");
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + it->second + "'");
  }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + it->second + "'");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::invalid_argument("config: bad bool for " + key + ": '" + it->second + "'");
}

namespace {

void check_known_keys(const KeyValueConfig& kv, const std::string& section,
                      const std::vector<std::string>& known, std::vector<std::string>& errors) {
  for (const auto& [key, value] : kv.values) {
    if (key.rfind(section + ".", 0) != 0) continue;
    bool ok = false;
    for (const auto& k : known)
      if (key == section + "." + k) {
        ok = true;
        break;
      }
    if (!ok) errors.push_back("unknown key '" + key + "'");
  }
}

[[noreturn]] void raise(const std::vector<std::string>& errors) {
  std::ostringstream os;
  os << "invalid configuration:";
  for (const auto& e : errors) os << "\n  - " << e;
  throw std::invalid_argument(os.str());
}

}  // namespace

AttackConfig parse_attack_config(const KeyValueConfig& kv) {
  std::vector<std::string> errors;
  check_known_keys(kv, "attack",
                   {"mode", "q_in", "q_out", "levels", "delta", "alpha", "eta", "lambda",
                    "max_iters", "tol_in", "tol_out", "seed", "filter", "use_adam",
                    "init_noise_scale", "pgd_iters"},
                   errors);

  AttackConfig c;
  try {
    c.mode = attack_mode_from_string(kv.get("attack.mode", "tmla"));
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  try {
    c.q_in = kv.get_double("attack.q_in", c.q_in);
    c.q_out = kv.get_double("attack.q_out", c.q_out);
    c.levels = kv.get_int("attack.levels", c.levels);
    c.delta = kv.get_double("attack.delta", c.delta);
    c.alpha = kv.get_double("attack.alpha", c.alpha);
    c.eta = kv.get_double("attack.eta", c.eta);
    c.lambda = kv.get_double("attack.lambda", c.lambda);
    c.max_iters = kv.get_int("attack.max_iters", c.max_iters);
    c.tol_in = kv.get_double("attack.tol_in", c.tol_in);
    c.tol_out = kv.get_double("attack.tol_out", c.tol_out);
    c.seed = kv.get_u64("attack.seed", c.seed);
    c.filter = kv.get("attack.filter", c.filter);
    c.use_adam = kv.get_bool("attack.use_adam", c.use_adam);
    c.init_noise_scale = kv.get_double("attack.init_noise_scale", c.init_noise_scale);
    c.pgd_iters = kv.get_int("attack.pgd_iters", c.pgd_iters);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  if (errors.empty()) {
    try {
      c.validate();
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) raise(errors);
  return c;
}

SurrogateCodecParams parse_codec_config(const KeyValueConfig& kv) {
  std::vector<std::string> errors;
  check_known_keys(kv, "codec", {"block", "q_fine", "q_coarse", "tau", "sharpness", "seed"},
                   errors);
  SurrogateCodecParams p;
  try {
    p.block = kv.get_int("codec.block", p.block);
    p.q_fine = kv.get_double("codec.q_fine", p.q_fine);
    p.q_coarse = kv.get_double("codec.q_coarse", p.q_coarse);
    p.tau = kv.get_double("codec.tau", p.tau);
    p.sharpness = kv.get_double("codec.sharpness", p.sharpness);
    p.seed = kv.get_u64("codec.seed", p.seed);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  if (errors.empty()) {
    try {
      p.validate();
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) raise(errors);
  return p;
}

DefenseConfig parse_defense_config(const KeyValueConfig& kv) {
  std::vector<std::string> errors;
  check_known_keys(kv, "defense",
                   {"delta", "eta", "iters", "seed", "use_adam", "adam_eta", "loss"}, errors);
  DefenseConfig d;
  try {
    const std::string loss = kv.get("defense.loss", "mse");
    if (loss != "mse") throw std::invalid_argument("config: unknown defense.loss '" + loss + "'");
    d.loss = DefenseLoss::mse;
    d.delta = kv.get_double("defense.delta", d.delta);
    d.eta = kv.get_double("defense.eta", d.eta);
    d.iters = kv.get_int("defense.iters", d.iters);
    d.seed = kv.get_u64("defense.seed", d.seed);
    d.use_adam = kv.get_bool("defense.use_adam", d.use_adam);
    d.adam_eta = kv.get_double("defense.adam_eta", d.adam_eta);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  if (errors.empty()) {
    try {
      d.validate();
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) raise(errors);
  return d;
}

namespace {

void render_codec(const SurrogateCodecParams& c, KeyValueConfig& kv) {
  kv.set("codec.block", std::to_string(c.block));
  kv.set("codec.q_fine", csv_number(c.q_fine));
  kv.set("codec.q_coarse", csv_number(c.q_coarse));
  kv.set("codec.tau", csv_number(c.tau));
  kv.set("codec.sharpness", csv_number(c.sharpness));
  kv.set("codec.seed", std::to_string(c.seed));
}

}  // namespace

KeyValueConfig render_config(const AttackConfig& a, const SurrogateCodecParams& c) {
  KeyValueConfig kv;
  kv.set("attack.mode", to_string(a.mode));
  kv.set("attack.q_in", csv_number(a.q_in));
  kv.set("attack.q_out", csv_number(a.q_out));
  kv.set("attack.levels", std::to_string(a.levels));
  kv.set("attack.delta", csv_number(a.delta));
  kv.set("attack.alpha", csv_number(a.alpha));
  kv.set("attack.eta", csv_number(a.eta));
  kv.set("attack.lambda", csv_number(a.lambda));
  kv.set("attack.max_iters", std::to_string(a.max_iters));
  kv.set("attack.tol_in", csv_number(a.tol_in));
  kv.set("attack.tol_out", csv_number(a.tol_out));
  kv.set("attack.seed", std::to_string(a.seed));
  kv.set("attack.filter", a.filter);
  kv.set("attack.use_adam", a.use_adam ? "true" : "false");
  kv.set("attack.init_noise_scale", csv_number(a.init_noise_scale));
  kv.set("attack.pgd_iters", std::to_string(a.pgd_iters));
  render_codec(c, kv);
  return kv;
}

KeyValueConfig render_config(const DefenseConfig& d, const SurrogateCodecParams& c) {
  KeyValueConfig kv;
  kv.set("defense.loss", "mse");
  kv.set("defense.delta", csv_number(d.delta));
  kv.set("defense.eta", csv_number(d.eta));
  kv.set("defense.iters", std::to_string(d.iters));
  kv.set("defense.seed", std::to_string(d.seed));
  kv.set("defense.use_adam", d.use_adam ? "true" : "false");
  kv.set("defense.adam_eta", csv_number(d.adam_eta));
  render_codec(c, kv);
  return kv;
}

std::vector<std::string> load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot read " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::filesystem::path p(t);
    if (p.is_relative()) p = base / p;
    out.push_back(p.string());
  }
  if (out.empty()) throw std::runtime_error("manifest: no entries in " + path);
  return out;
}

}  // namespace tmla

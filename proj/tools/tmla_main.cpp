// Command-line front end: attack / defend / entropy / alpha / metrics /
// study / codec-check, wired for reproducible runs (every run writes a
// run.json provenance record that reproduces it bit-identically).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tmla/analysis.hpp"
#include "tmla/attack.hpp"
#include "tmla/codec.hpp"
#include "tmla/config.hpp"
#include "tmla/defense.hpp"
#include "tmla/entropy.hpp"
#include "tmla/image_io.hpp"
#include "tmla/metrics.hpp"
#include "tmla/parallel.hpp"
#include "tmla/rng.hpp"
#include "tmla/synth.hpp"
#include "tmla/wavelet.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tmla;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

[[noreturn]] void config_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  std::exit(kExitConfig);
}

fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("TMLA_OUT_ROOT")) p = fs::path(root) / p;
  }
  return p;
}

fs::path prepare_out_dir(const std::string& out, bool force) {
  const fs::path dir = resolve_out(out);
  if (fs::exists(dir)) {
    if (!force) config_error("output directory exists: " + dir.string() + " (use --force)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  return dir;
}

KeyValueConfig gather_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
  KeyValueConfig kv;
  try {
    if (!config_path.empty()) kv = KeyValueConfig::from_file(config_path);
    for (const auto& line : overrides) kv.set_line(line);
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  return kv;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream f(path);
  if (!f) config_error("cannot write " + path.string());
  for (const auto& l : lines) f << l << "\n";
}

json config_to_json(const KeyValueConfig& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv.values) j[k] = v;
  return j;
}

KeyValueConfig config_from_json(const json& j) {
  KeyValueConfig kv;
  for (auto it = j.begin(); it != j.end(); ++it) kv.set(it.key(), it.value().get<std::string>());
  return kv;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string metric_cells(const MetricReport& m) {
  return csv_number(m.psnr) + "," + csv_number(m.ssim) + "," + csv_number(m.vif) + "," +
         csv_number(m.mse);
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

struct AttackArgs {
  std::string config_path, manifest_path, out, mode, provenance;
  std::vector<std::string> overrides;
  int jobs = 0;  // 0 = all available cores
  bool force = false;
};

int cmd_attack(const AttackArgs& args) {
  KeyValueConfig kv;
  std::vector<std::string> manifest;

  if (!args.provenance.empty()) {
    std::ifstream f(args.provenance);
    if (!f) config_error("cannot read provenance record " + args.provenance);
    json j;
    try {
      f >> j;
      kv = config_from_json(j.at("config"));
      manifest = j.at("manifest").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      config_error(std::string("bad provenance record: ") + e.what());
    }
  } else {
    kv = gather_config(args.config_path, args.overrides);
    if (!args.mode.empty()) kv.set("attack.mode", args.mode);
    if (args.manifest_path.empty()) config_error("attack: --manifest is required");
    try {
      manifest = load_manifest(args.manifest_path);
    } catch (const std::exception& e) {
      config_error(e.what());
    }
  }

  AttackConfig acfg;
  SurrogateCodecParams cparams;
  try {
    acfg = parse_attack_config(kv);
    cparams = parse_codec_config(kv);
  } catch (const std::exception& e) {
    config_error(e.what());
  }

  // load everything up front; unreadable entries become failed rows
  std::vector<Image> images;
  std::vector<std::string> names;
  std::vector<std::string> load_errors(manifest.size());
  std::vector<bool> loaded(manifest.size(), false);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    names.push_back(stem_of(manifest[i]));
    try {
      images.push_back(load_image(manifest[i]));
      loaded[i] = true;
    } catch (const std::exception& e) {
      images.push_back(Image(8, 8, 1, 0.0));  // placeholder, never attacked
      load_errors[i] = e.what();
    }
  }

  const fs::path dir = prepare_out_dir(args.out, args.force);

  // provenance first so a crashed run is still reproducible
  {
    json j;
    j["tool_version"] = kToolVersion;
    j["command"] = "attack";
    j["config"] = config_to_json(render_config(acfg, cparams));
    j["manifest"] = manifest;
    j["codec_descriptor"] = cparams.descriptor();
    std::ofstream f(dir / "run.json");
    f << j.dump(2) << "\n";
  }

  CodecContract codec = make_surrogate_codec(cparams);

  // Per-image seed follows the manifest position, so a failed load never
  // shifts the seeds of later images. `--jobs` parallelizes across images;
  // results land in manifest order either way.
  std::vector<BatchEntry> entries(manifest.size());
  const int n = static_cast<int>(manifest.size());
  auto run_one = [&](int i) {
    BatchEntry& e = entries[static_cast<std::size_t>(i)];
    e.name = names[static_cast<std::size_t>(i)];
    if (!loaded[static_cast<std::size_t>(i)]) {
      e.ok = false;
      e.error = load_errors[static_cast<std::size_t>(i)];
      return;
    }
    AttackConfig per = acfg;
    per.seed = acfg.seed + static_cast<std::uint64_t>(i);
    try {
      e.result = run_attack(images[static_cast<std::size_t>(i)], codec, per);
      e.ok = true;
    } catch (const std::exception& ex) {
      e.ok = false;
      e.error = ex.what();
    }
  };
  const int jobs = args.jobs > 0 ? args.jobs : par::threads();
#ifdef _OPENMP
  if (jobs > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < n; ++i) run_one(i);
  } else {
    for (int i = 0; i < n; ++i) run_one(i);
  }
#else
  for (int i = 0; i < n; ++i) run_one(i);
#endif

  // per-image artifacts + results.csv
  std::vector<std::string> lines;
  lines.push_back(
      "image,method,model,stealth_psnr,stealth_ssim,stealth_vif,stealth_mse,"
      "atk_psnr,atk_ssim,atk_vif,atk_mse,bpp,iterations,converged,"
      "final_stealth_psnr,final_atk_psnr,status,error");
  std::vector<ResultRow> rows;
  bool any_failed = false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const BatchEntry& e = entries[i];
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%03zu_", i);
    const std::string base = prefix + e.name;
    if (!e.ok) {
      any_failed = true;
      lines.push_back(e.name + "," + to_string(acfg.mode) + "," + cparams.descriptor() +
                      ",,,,,,,,,,,,,,failed," + e.error);
      continue;
    }
    const AttackResult& r = e.result;
    save_png((dir / (base + "_adv.png")).string(), r.x_adv);
    save_png((dir / (base + "_rec.png")).string(), r.x_hat_adv);
    save_png((dir / (base + "_diff.png")).string(), diff_map(images[i], r.x_adv));
    {
      std::vector<std::string> trace;
      trace.push_back("iter,loss,stealth_psnr,atk_psnr");
      for (std::size_t t = 0; t < r.loss_trace.size(); ++t)
        trace.push_back(std::to_string(t) + "," + csv_number(r.loss_trace[t]) + "," +
                        csv_number(r.stealth_trace[t]) + "," + csv_number(r.success_trace[t]));
      write_lines(dir / (base + "_loss.csv"), trace);
    }
    lines.push_back(e.name + "," + to_string(acfg.mode) + "," + cparams.descriptor() + "," +
                    metric_cells(r.stealth) + "," + metric_cells(r.success) + "," +
                    csv_number(r.bpp) + "," + std::to_string(r.iterations) + "," +
                    (r.converged ? "true" : "false") + "," + csv_number(r.final_stealth_psnr) +
                    "," + csv_number(r.final_success_psnr) + ",ok,");
    rows.push_back(ResultRow{to_string(acfg.mode), cparams.descriptor(), r.stealth.psnr,
                             r.stealth.vif, r.success.psnr, r.success.ssim, r.success.vif,
                             r.bpp});
  }
  write_lines(dir / "results.csv", lines);
  if (!rows.empty()) write_lines(dir / "summary.csv", summary_table(rows));

  std::cout << "wrote " << (dir / "results.csv").string() << "\n";
  return any_failed ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// defend
// ---------------------------------------------------------------------------

int cmd_defend(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& input, const std::string& out, bool force) {
  KeyValueConfig kv = gather_config(config_path, overrides);
  DefenseConfig dcfg;
  SurrogateCodecParams cparams;
  try {
    dcfg = parse_defense_config(kv);
    cparams = parse_codec_config(kv);
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  Image x;
  try {
    x = load_image(input);
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  const fs::path dir = prepare_out_dir(out, force);
  {
    json j;
    j["tool_version"] = kToolVersion;
    j["command"] = "defend";
    j["config"] = config_to_json(render_config(dcfg, cparams));
    j["input"] = input;
    j["codec_descriptor"] = cparams.descriptor();
    std::ofstream f(dir / "run.json");
    f << j.dump(2) << "\n";
  }

  CodecContract codec = make_surrogate_codec(cparams);
  auto [rec_before, bpp_before] = codec.forward(x);
  DefenseResult r = run_defense(x, codec, dcfg);
  auto [rec_after, bpp_after] = codec.forward(r.x_defended);
  (void)bpp_after;

  save_png((dir / "defended.png").string(), r.x_defended);
  save_png((dir / "defended_rec.png").string(), r.x_hat_defended);
  std::vector<std::string> lines;
  lines.push_back("metric,before,after");
  lines.push_back("rec_psnr_vs_input," + csv_number(psnr(rec_before, x)) + "," +
                  csv_number(psnr(r.x_hat_defended, x)));
  lines.push_back("objective_mse," + csv_number(r.objective_init) + "," +
                  csv_number(r.objective_best));
  write_lines(dir / "defense.csv", lines);
  std::cout << "rec PSNR vs received input: " << csv_number(psnr(rec_before, x)) << " -> "
            << csv_number(psnr(r.x_hat_defended, x)) << " dB\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// entropy / alpha / metrics / study / codec-check
// ---------------------------------------------------------------------------

int cmd_entropy(const std::string& image_path, int radius, const std::string& heatmap,
                const std::string& csv) {
  Image img;
  try {
    img = load_image(image_path);
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  EntropyMap em = local_entropy_map(img, radius);
  if (!heatmap.empty()) {
    Image h(em.map.rows, em.map.cols, 1);
    std::copy(em.map.v.begin(), em.map.v.end(), h.data.begin());
    save_png(heatmap, h);
  }
  if (!csv.empty()) {
    std::vector<std::string> lines;
    for (int y = 0; y < em.map.rows; ++y) {
      std::string line;
      for (int x = 0; x < em.map.cols; ++x) {
        if (x) line += ",";
        line += csv_number(em.map.at(y, x));
      }
      lines.push_back(std::move(line));
    }
    write_lines(csv, lines);
  }
  std::cout << csv_number(em.mean) << "\n";
  return kExitOk;
}

int cmd_alpha(const std::string& manifest_path, int levels, const std::string& out_csv) {
  std::vector<std::string> manifest;
  std::vector<Image> images;
  try {
    manifest = load_manifest(manifest_path);
    for (const auto& p : manifest) images.push_back(load_image(p));
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  AlphaEstimate est = estimate_alpha(images, levels);
  std::vector<std::string> lines;
  lines.push_back("image,median_ratio");
  for (std::size_t i = 0; i < est.per_image_ratio.size(); ++i)
    lines.push_back(stem_of(manifest[i]) + "," + csv_number(est.per_image_ratio[i]));
  lines.push_back("alpha_emp," + csv_number(est.alpha_emp));
  if (!out_csv.empty()) write_lines(out_csv, lines);
  std::cout << csv_number(est.alpha_emp) << "\n";
  return kExitOk;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
  try {
    Image a = load_image(a_path);
    Image b = load_image(b_path);
    MetricReport m = metric_report(a, b);
    std::cout << "psnr,ssim,vif,mse\n" << metric_cells(m) << "\n";
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  return kExitOk;
}

int cmd_study(const std::string& results_path, const std::string& manifest_path, int radius,
              bool filter_outliers, const std::string& out, bool force) {
  // results.csv rows in manifest order; pull image, stealth_vif, atk_vif
  std::ifstream f(results_path);
  if (!f) config_error("cannot read " + results_path);
  std::string header;
  std::getline(f, header);
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto col_of = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    config_error("results.csv: missing column " + name);
  };
  const int c_image = col_of("image"), c_svif = col_of("stealth_vif"),
            c_avif = col_of("atk_vif"), c_status = col_of("status");

  struct Row {
    std::string image;
    double drop;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (static_cast<int>(cells.size()) <= std::max({c_image, c_svif, c_avif, c_status})) continue;
    if (cells[static_cast<std::size_t>(c_status)] != "ok") continue;
    rows.push_back({cells[static_cast<std::size_t>(c_image)],
                    relative_vif_drop(std::stod(cells[static_cast<std::size_t>(c_svif)]),
                                      std::stod(cells[static_cast<std::size_t>(c_avif)]))});
  }
  if (rows.empty()) config_error("results.csv: no usable rows");

  std::vector<std::string> manifest;
  try {
    manifest = load_manifest(manifest_path);
  } catch (const std::exception& e) {
    config_error(e.what());
  }
  std::map<std::string, std::string> path_of;
  for (const auto& p : manifest) path_of[stem_of(p)] = p;

  std::vector<double> mus, drops;
  for (const Row& r : rows) {
    auto it = path_of.find(r.image);
    if (it == path_of.end()) config_error("manifest has no entry for result row " + r.image);
    Image img = load_image(it->second);
    const double mu = local_entropy_map(img, radius).mean;
    if (filter_outliers && mu < 0.6 && r.drop < 0.1) continue;
    mus.push_back(mu);
    drops.push_back(r.drop);
  }
  if (mus.size() < 3) config_error("fewer than 3 rows after filtering");

  Correlation corr;
  try {
    corr = correlation(mus, drops);
  } catch (const std::exception& e) {
    config_error(e.what());
  }

  const fs::path dir = prepare_out_dir(out, force);
  // scatter data stays two-column; names are recoverable from results.csv
  std::vector<std::string> scatter;
  scatter.push_back("mu_entropy,vif_drop");
  for (std::size_t i = 0; i < mus.size(); ++i)
    scatter.push_back(csv_number(mus[i]) + "," + csv_number(drops[i]));
  write_lines(dir / "scatter.csv", scatter);
  write_lines(dir / "correlation.csv",
              {"pearson_r,spearman_rho,p_value",
               csv_number(corr.pearson) + "," + csv_number(corr.spearman) + "," +
                   csv_number(corr.p_value)});
  std::cout << "pearson=" << csv_number(corr.pearson)
            << " spearman=" << csv_number(corr.spearman) << " p=" << csv_number(corr.p_value)
            << "\n";
  return kExitOk;
}

int cmd_codec_check(const std::string& config_path, const std::vector<std::string>& overrides) {
  KeyValueConfig kv = gather_config(config_path, overrides);
  SurrogateCodecParams p;
  try {
    p = parse_codec_config(kv);
  } catch (const std::exception& e) {
    config_error(e.what());
  }

  Image x = synth_scene(32, 32, 1, 2024);
  Image cot(32, 32, 1);
  Rng rng(1);
  for (double& v : cot.data) v = rng.uniform(-1, 1);
  Image g = surrogate_vjp(x, cot, p);

  double worst = 0.0;
  for (int t = 0; t < 32; ++t) {
    Image d(32, 32, 1);
    double norm = 0.0;
    for (double& v : d.data) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : d.data) v /= norm;

    auto central = [&](double h) {
      Image xp = x, xm = x;
      for (std::size_t i = 0; i < x.size(); ++i) {
        xp.data[i] += h * d.data[i];
        xm.data[i] -= h * d.data[i];
      }
      auto [rp, b1] = surrogate_forward(xp, p);
      auto [rm, b2] = surrogate_forward(xm, p);
      double fd = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        fd += cot.data[i] * (rp.data[i] - rm.data[i]) / (2 * h);
      return fd;
    };
    // Richardson extrapolation cancels the h^2 truncation term, which the
    // gate's curvature makes visible at any single usable step size.
    const double h = 1e-6;
    const double fd = (4.0 * central(h / 2) - central(h)) / 3.0;
    double gd = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) gd += g.data[i] * d.data[i];
    const double denom = std::max(std::abs(fd), std::abs(gd));
    if (denom > 1e-12) worst = std::max(worst, std::abs(fd - gd) / denom);
  }
  std::cout << "codec vjp max relative error over 32 directional probes: " << csv_number(worst)
            << "\n";
  return worst <= 1e-4 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavelet-domain adversarial attack toolkit for learned image codecs"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // attack
  AttackArgs aa;
  auto* attack = app.add_subcommand("attack", "run an attack over a manifest of images");
  attack->add_option("--config", aa.config_path, "key=value config file");
  attack->add_option("--manifest", aa.manifest_path, "text file with one image path per line");
  attack->add_option("--out", aa.out, "output directory")->required();
  attack->add_option("--mode", aa.mode, "tmla | pgd | pixel-logexp");
  attack->add_option("--set", aa.overrides, "override a config key, e.g. attack.q_in=50");
  attack->add_option("--jobs", aa.jobs, "parallel images (default: all cores)");
  attack->add_option("--provenance", aa.provenance, "re-run from a run.json record");
  attack->add_flag("--force", aa.force, "replace an existing output directory");

  // defend
  std::string d_config, d_input, d_out;
  std::vector<std::string> d_overrides;
  bool d_force = false;
  auto* defend = app.add_subcommand("defend", "counter-perturb an attacked image");
  defend->add_option("--config", d_config, "key=value config file");
  defend->add_option("--input", d_input, "attacked image")->required();
  defend->add_option("--out", d_out, "output directory")->required();
  defend->add_option("--set", d_overrides, "override a config key");
  defend->add_flag("--force", d_force, "replace an existing output directory");

  // entropy
  std::string e_image, e_heatmap, e_csv;
  int e_radius = 10;
  auto* entropy = app.add_subcommand("entropy", "normalized local entropy map and mean score");
  entropy->add_option("image", e_image, "input image")->required();
  entropy->add_option("--radius", e_radius, "disk radius in pixels");
  entropy->add_option("--heatmap", e_heatmap, "write the map as a grayscale PNG");
  entropy->add_option("--csv", e_csv, "write the raw map as CSV");

  // alpha
  std::string al_manifest, al_out;
  int al_levels = 5;
  auto* alpha = app.add_subcommand("alpha", "empirical subband decay factor");
  alpha->add_option("--manifest", al_manifest, "image manifest")->required();
  alpha->add_option("--levels", al_levels, "decomposition depth");
  alpha->add_option("--out", al_out, "write per-image ratios as CSV");

  // metrics
  std::string m_a, m_b;
  auto* metrics = app.add_subcommand("metrics", "psnr/ssim/vif/mse between two images");
  metrics->add_option("reference", m_a, "reference image")->required();
  metrics->add_option("image", m_b, "image under test")->required();

  // study
  std::string s_results, s_manifest, s_out;
  int s_radius = 10;
  bool s_filter = false, s_force = false;
  auto* study = app.add_subcommand("study", "entropy vs relative VIF drop correlation");
  study->add_option("--results", s_results, "results.csv from an attack run")->required();
  study->add_option("--manifest", s_manifest, "the manifest that produced it")->required();
  study->add_option("--radius", s_radius, "entropy disk radius");
  study->add_option("--out", s_out, "output directory")->required();
  study->add_flag("--filter-outliers", s_filter,
                  "drop rows with mu_E < 0.6 and vif drop < 0.1");
  study->add_flag("--force", s_force, "replace an existing output directory");

  // codec-check
  std::string cc_config;
  std::vector<std::string> cc_overrides;
  auto* codec_check =
      app.add_subcommand("codec-check", "finite-difference self-test of the codec vjp");
  codec_check->add_option("--config", cc_config, "key=value config file");
  codec_check->add_option("--set", cc_overrides, "override a config key");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*attack) return cmd_attack(aa);
    if (*defend) return cmd_defend(d_config, d_overrides, d_input, d_out, d_force);
    if (*entropy) return cmd_entropy(e_image, e_radius, e_heatmap, e_csv);
    if (*alpha) return cmd_alpha(al_manifest, al_levels, al_out);
    if (*metrics) return cmd_metrics(m_a, m_b);
    if (*study) return cmd_study(s_results, s_manifest, s_radius, s_filter, s_out, s_force);
    if (*codec_check) return cmd_codec_check(cc_config, cc_overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

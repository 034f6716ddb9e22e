// Drives the installed CLI binary end to end: run directories, CSV schemas,
// exit codes, provenance reproduction.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tmla/image_io.hpp"
#include "tmla/synth.hpp"

namespace fs = std::filesystem;
using namespace tmla;

#ifndef TMLA_CLI_PATH
#error "TMLA_CLI_PATH must point at the built binary"
#endif
#ifndef TMLA_SOURCE_DIR
#error "TMLA_SOURCE_DIR must point at the repository root"
#endif

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd =
      (env.empty() ? "" : "env " + env + " ") + std::string(TMLA_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof buf, p)) out += buf;
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(f, l)) lines.push_back(l);
  return lines;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// one scratch workspace with a 2-image manifest, shared across cases
struct Workspace {
  fs::path dir;
  fs::path manifest;
  Workspace() {
    dir = testutil::scratch_dir("cli");
    const auto images = synth_fixture_trio(48, 48, 1, 3000);
    save_png((dir / "a.png").string(), images[0]);
    save_png((dir / "b.png").string(), images[1]);
    std::ofstream m(dir / "manifest.txt");
    m << "a.png\nb.png\n";
    manifest = dir / "manifest.txt";
  }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

std::string fast_attack_overrides() {
  return "--set attack.max_iters=40 --set attack.eta=0.001 --set attack.q_in=50 "
         "--set attack.q_out=40";
}

const std::string kDefaultCfg = std::string(TMLA_SOURCE_DIR) + "/configs/default.cfg";

}  // namespace

TEST_CASE("attack run writes the expected artifacts and schema") {
  const fs::path out = ws().dir / "run-a";
  RunResult r = run_cli("attack --config " + kDefaultCfg + " --manifest " +
                        ws().manifest.string() + " --out " + out.string() + " " +
                        fast_attack_overrides());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out / "run.json"));
  CHECK(fs::exists(out / "results.csv"));
  CHECK(fs::exists(out / "summary.csv"));
  CHECK(fs::exists(out / "000_a_adv.png"));
  CHECK(fs::exists(out / "000_a_rec.png"));
  CHECK(fs::exists(out / "000_a_diff.png"));
  CHECK(fs::exists(out / "000_a_loss.csv"));
  CHECK(fs::exists(out / "001_b_adv.png"));

  auto lines = read_lines(out / "results.csv");
  REQUIRE(lines.size() == 3);  // header + 2 rows
  CHECK(lines[0].rfind("image,method,model,stealth_psnr", 0) == 0);
  CHECK(lines[1].rfind("a,tmla,", 0) == 0);
  CHECK(lines[2].rfind("b,tmla,", 0) == 0);

  auto sum = read_lines(out / "summary.csv");
  CHECK(sum[1] == "method,model,stat,stealth_psnr,stealth_vif,atk_psnr,atk_ssim,atk_vif,bpp");
}

TEST_CASE("missing manifest exits 1 without creating the output directory") {
  const fs::path out = ws().dir / "run-missing";
  RunResult r = run_cli("attack --config " + kDefaultCfg + " --manifest /nonexistent.txt --out " +
                        out.string());
  CHECK(r.exit_code == 1);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("invalid config key exits 1 with a consolidated message") {
  const fs::path out = ws().dir / "run-badkey";
  RunResult r = run_cli("attack --manifest " + ws().manifest.string() + " --out " + out.string() +
                        " --set attack.typo=1");
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("unknown key") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("existing output directory is refused unless --force") {
  const fs::path out = ws().dir / "run-exists";
  fs::create_directories(out);
  RunResult r = run_cli("attack --config " + kDefaultCfg + " --manifest " +
                        ws().manifest.string() + " --out " + out.string() + " " +
                        fast_attack_overrides());
  CHECK(r.exit_code == 1);
  RunResult r2 = run_cli("attack --config " + kDefaultCfg + " --manifest " +
                         ws().manifest.string() + " --out " + out.string() + " --force " +
                         fast_attack_overrides());
  CHECK(r2.exit_code == 0);
}

TEST_CASE("pgd mode emits the same schema with its own method column") {
  const fs::path out = ws().dir / "run-pgd";
  RunResult r = run_cli("attack --mode pgd --config " + kDefaultCfg + " --manifest " +
                        ws().manifest.string() + " --out " + out.string() +
                        " --set attack.pgd_iters=10");
  CHECK(r.exit_code == 0);
  auto lines = read_lines(out / "results.csv");
  CHECK(lines[1].rfind("a,pgd,", 0) == 0);
}

TEST_CASE("per-image failures keep the batch going and exit 2") {
  const fs::path dir = ws().dir;
  {
    std::ofstream m(dir / "manifest-bad.txt");
    m << "a.png\nmissing-image.png\n";
  }
  const fs::path out = dir / "run-partial";
  RunResult r = run_cli("attack --config " + kDefaultCfg + " --manifest " +
                        (dir / "manifest-bad.txt").string() + " --out " + out.string() + " " +
                        fast_attack_overrides());
  CHECK(r.exit_code == 2);
  auto lines = read_lines(out / "results.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].find(",ok,") != std::string::npos);
  CHECK(lines[2].find("failed") != std::string::npos);
}

TEST_CASE("provenance record reproduces byte-identical CSVs") {
  const fs::path out1 = ws().dir / "run-p1";
  const fs::path out2 = ws().dir / "run-p2";
  RunResult r1 = run_cli("attack --config " + kDefaultCfg + " --manifest " +
                         ws().manifest.string() + " --out " + out1.string() + " " +
                         fast_attack_overrides());
  REQUIRE(r1.exit_code == 0);
  RunResult r2 = run_cli("attack --provenance " + (out1 / "run.json").string() + " --out " +
                         out2.string());
  REQUIRE(r2.exit_code == 0);
  CHECK(read_file(out1 / "results.csv") == read_file(out2 / "results.csv"));
  CHECK(read_file(out1 / "summary.csv") == read_file(out2 / "summary.csv"));
  CHECK(read_file(out1 / "run.json") == read_file(out2 / "run.json"));
}

TEST_CASE("metrics subcommand prints one CSV row") {
  RunResult r = run_cli("metrics " + (ws().dir / "a.png").string() + " " +
                        (ws().dir / "b.png").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("psnr,ssim,vif,mse\n", 0) == 0);
  // identical inputs cap the psnr
  RunResult same =
      run_cli("metrics " + (ws().dir / "a.png").string() + " " + (ws().dir / "a.png").string());
  CHECK(same.out.find("\n100,1,") != std::string::npos);
}

TEST_CASE("entropy subcommand prints the score and writes artifacts") {
  const fs::path heat = ws().dir / "heat.png";
  const fs::path csv = ws().dir / "heat.csv";
  RunResult r = run_cli("entropy " + (ws().dir / "a.png").string() + " --radius 10 --heatmap " +
                        heat.string() + " --csv " + csv.string());
  CHECK(r.exit_code == 0);
  const double mu = std::stod(r.out);
  CHECK(mu > 0.0);
  CHECK(mu < 1.0);
  CHECK(fs::exists(heat));
  CHECK(read_lines(csv).size() == 48);
}

TEST_CASE("alpha subcommand writes the estimate CSV") {
  const fs::path dir = ws().dir;
  {
    // spectral manifest for the decay statistic
    for (int i = 0; i < 3; ++i)
      save_png((dir / ("s" + std::to_string(i) + ".png")).string(),
               synth_spectral(64, 64, 1, 600 + static_cast<std::uint64_t>(i), 2.0));
    std::ofstream m(dir / "manifest-alpha.txt");
    m << "s0.png\ns1.png\ns2.png\n";
  }
  const fs::path csv = dir / "alpha.csv";
  RunResult r = run_cli("alpha --manifest " + (dir / "manifest-alpha.txt").string() +
                        " --levels 5 --out " + csv.string());
  CHECK(r.exit_code == 0);
  auto lines = read_lines(csv);
  REQUIRE(lines.size() == 5);  // header + 3 images + alpha_emp
  CHECK(lines[0] == "image,median_ratio");
  CHECK(lines[4].rfind("alpha_emp,", 0) == 0);
  const double alpha = std::stod(r.out);
  CHECK(alpha > 1.0);
  CHECK(alpha < 3.0);
}

TEST_CASE("defend subcommand writes defended artifacts") {
  const fs::path out = ws().dir / "run-defend";
  RunResult r = run_cli("defend --config " + kDefaultCfg + " --input " +
                        (ws().dir / "a.png").string() + " --out " + out.string() +
                        " --set defense.iters=5");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out / "defended.png"));
  CHECK(fs::exists(out / "defended_rec.png"));
  CHECK(fs::exists(out / "defense.csv"));
  CHECK(fs::exists(out / "run.json"));
}

TEST_CASE("study subcommand pairs results with entropy scores") {
  // tiny 3-image attack run first
  const fs::path dir = ws().dir;
  {
    save_png((dir / "c.png").string(), synth_fixture_trio(48, 48, 1, 3000)[2]);
    std::ofstream m(dir / "manifest3.txt");
    m << "a.png\nb.png\nc.png\n";
  }
  const fs::path out = dir / "run-study-attack";
  RunResult r1 = run_cli("attack --config " + kDefaultCfg + " --manifest " +
                         (dir / "manifest3.txt").string() + " --out " + out.string() + " " +
                         fast_attack_overrides());
  REQUIRE(r1.exit_code == 0);
  const fs::path sout = dir / "run-study";
  RunResult r2 = run_cli("study --results " + (out / "results.csv").string() + " --manifest " +
                         (dir / "manifest3.txt").string() + " --out " + sout.string());
  CHECK(r2.exit_code == 0);
  CHECK(fs::exists(sout / "scatter.csv"));
  CHECK(fs::exists(sout / "correlation.csv"));
  auto scat = read_lines(sout / "scatter.csv");
  REQUIRE(scat.size() == 4);
  CHECK(scat[0] == "mu_entropy,vif_drop");
}

TEST_CASE("codec-check subcommand self-tests the vjp") {
  RunResult r = run_cli("codec-check");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("relative error") != std::string::npos);
}

TEST_CASE("TMLA_OUT_ROOT anchors relative output directories") {
  const fs::path root = ws().dir / "outroot";
  fs::create_directories(root);
  RunResult r = run_cli("attack --config " + kDefaultCfg + " --manifest " +
                        ws().manifest.string() + " --out rooted-run " + fast_attack_overrides() +
                        " --set attack.max_iters=5",
                        "TMLA_OUT_ROOT=" + root.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(root / "rooted-run" / "results.csv"));
}

namespace {

// numeric-tolerant CSV comparison: number cells within 1e-9 relative,
// everything else exact
void check_csv_matches(const fs::path& got_path, const fs::path& want_path) {
  auto got = read_lines(got_path);
  auto want = read_lines(want_path);
  REQUIRE(got.size() == want.size());
  for (std::size_t li = 0; li < got.size(); ++li) {
    std::stringstream ga(got[li]), wa(want[li]);
    std::string gc, wc;
    while (true) {
      const bool g_more = static_cast<bool>(std::getline(ga, gc, ','));
      const bool w_more = static_cast<bool>(std::getline(wa, wc, ','));
      REQUIRE(g_more == w_more);
      if (!g_more) break;
      char* gend = nullptr;
      char* wend = nullptr;
      const double gv = std::strtod(gc.c_str(), &gend);
      const double wv = std::strtod(wc.c_str(), &wend);
      const bool g_num = gend && *gend == '\0' && !gc.empty();
      const bool w_num = wend && *wend == '\0' && !wc.empty();
      if (g_num && w_num) {
        CHECK(std::abs(gv - wv) <= 1e-9 * std::max({1.0, std::abs(gv), std::abs(wv)}));
      } else {
        CHECK(gc == wc);
      }
    }
  }
}

}  // namespace

TEST_CASE("golden regression: the frozen fixture run reproduces its CSVs") {
  const fs::path dir = ws().dir;
  {
    const auto trio = synth_fixture_trio(48, 48, 1, 3000);
    save_png((dir / "f0.png").string(), trio[0]);
    save_png((dir / "f1.png").string(), trio[1]);
    save_png((dir / "f2.png").string(), trio[2]);
    std::ofstream m(dir / "manifest-golden.txt");
    m << "f0.png\nf1.png\nf2.png\n";
  }
  const fs::path out = dir / "run-golden";
  RunResult r = run_cli("attack --manifest " + (dir / "manifest-golden.txt").string() +
                        " --out " + out.string() +
                        " --set attack.max_iters=40 --set attack.eta=0.001"
                        " --set attack.q_in=50 --set attack.q_out=40");
  REQUIRE(r.exit_code == 0);
  const fs::path data = fs::path(TMLA_SOURCE_DIR) / "tests" / "data";
  check_csv_matches(out / "results.csv", data / "golden_results.csv");
  check_csv_matches(out / "summary.csv", data / "golden_summary.csv");
}

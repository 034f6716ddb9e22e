#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "tmla/attack.hpp"
#include "tmla/metrics.hpp"
#include "tmla/synth.hpp"

using namespace tmla;
using testutil::max_abs_diff;

namespace {

CodecContract default_codec() { return make_surrogate_codec(SurrogateCodecParams{}); }

AttackConfig fast_cfg() {
  AttackConfig c;
  c.q_in = 50;
  c.q_out = 40;
  c.eta = 1e-3;
  c.max_iters = 60;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  AttackConfig c;
  c.delta = 0.5;
  c.alpha = 2.0;
  c.levels = 3;  // 0.5 * 2^2 = 2 >= 1
  CHECK_THROWS(c.validate());
  c = AttackConfig{};
  c.max_iters = 0;
  CHECK_THROWS(c.validate());
  c = AttackConfig{};
  c.tol_in = 0.0;
  CHECK_THROWS(c.validate());
  c = AttackConfig{};
  c.filter = "nope";
  CHECK_THROWS(c.validate());
  CHECK_NOTHROW(AttackConfig{}.validate());
  CHECK(to_string(attack_mode_from_string("pixel-logexp")) == "pixel-logexp");
  CHECK_THROWS(attack_mode_from_string("gan"));
}

TEST_CASE("zero-initialized noise leaves the pipeline at the cap") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 80);
  AttackConfig c = fast_cfg();
  c.init_noise_scale = 0.0;
  c.max_iters = 1;
  c.q_in = kPsnrCap;           // target the unperturbed operating point
  AttackResult r = run_tmla(x, codec, c);
  CHECK(r.stealth.psnr == kPsnrCap);  // iDWT(logexp(W,0)) introduces no error
}

TEST_CASE("cap targets keep zero noise stationary") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 81);
  auto [clean_rec, bpp] = codec.forward(x);
  AttackConfig c = fast_cfg();
  c.init_noise_scale = 0.0;
  c.lambda = 0.0;
  c.q_in = kPsnrCap;
  c.q_out = psnr(clean_rec, x);
  c.max_iters = 25;
  AttackResult r = run_tmla(x, codec, c);
  CHECK(r.converged);
  CHECK(r.loss_trace.front() == doctest::Approx(0.0));
  CHECK(r.loss_trace.back() == doctest::Approx(0.0));  // no drift
  CHECK(r.stealth.psnr == kPsnrCap);
}

TEST_CASE("first iterate equals the hand-composed pipeline on the Gaussian init") {
  // the loop's first stealth reading must match
  // PSNR(x, clip(iDWT(logexp(W, clip(N0))))) computed independently
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 88);
  AttackConfig c = fast_cfg();
  c.max_iters = 1;
  c.seed = 88;
  AttackResult r = run_tmla(x, codec, c);
  REQUIRE(r.stealth_trace.size() == 1);

  const FilterSpec& spec = FilterSpec::preset(c.filter);
  WaveletPyramid W = dwt2(x, spec, c.levels);
  NoisePyramid n0 = make_noise_like(W, budget_schedule(c.delta, c.alpha, c.levels));
  Rng rng(c.seed);
  fill_gaussian(n0, rng, c.init_noise_scale);
  clip_noise(n0);
  Image x_adv = clip01(idwt2(log_exp_apply(W, n0)));
  CHECK(r.stealth_trace[0] == psnr(x_adv, x));
}

TEST_CASE("budgets respected and samples stay in range") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 82);
  AttackConfig c = fast_cfg();
  AttackResult r = run_tmla(x, codec, c);
  REQUIRE(r.noise.has_value());
  const auto bounds = budget_schedule(c.delta, c.alpha, c.levels);
  r.noise->for_each_plane([&](const Plane& p, int k) {
    const double d = bounds[static_cast<std::size_t>(k - 1)];
    for (double v : p.v) {
      CHECK(v <= d + 1e-12);
      CHECK(v >= -d - 1e-12);
    }
  });
  for (double v : r.x_adv.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("deterministic given identical inputs") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 83);
  AttackConfig c = fast_cfg();
  c.max_iters = 30;
  AttackResult r1 = run_tmla(x, codec, c);
  AttackResult r2 = run_tmla(x, codec, c);
  CHECK(max_abs_diff(r1.x_adv, r2.x_adv) == 0.0);
  CHECK(max_abs_diff(r1.x_hat_adv, r2.x_hat_adv) == 0.0);
  CHECK(r1.loss_trace == r2.loss_trace);
  CHECK(r1.bpp == r2.bpp);
}

TEST_CASE("reported iterate has the lowest logged loss") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 84);
  AttackConfig c = fast_cfg();
  c.max_iters = 40;
  AttackResult r = run_tmla(x, codec, c);
  double best = 1e300;
  for (double l : r.loss_trace) best = std::min(best, l);
  // recompute the loss of the reported iterate
  const double li = std::abs(r.stealth.psnr - c.q_in);
  const double lo = std::abs(r.success.psnr - c.q_out);
  double l1 = 0.0;
  r.noise->for_each_plane([&](const Plane& p, int) {
    for (double v : p.v) l1 += std::abs(v);
  });
  CHECK(li + lo + c.lambda * l1 == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("stealth and success reports recompute bit-for-bit from the images") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 85);
  AttackConfig c = fast_cfg();
  c.max_iters = 20;
  AttackResult r = run_tmla(x, codec, c);
  MetricReport st = metric_report(x, r.x_adv);
  MetricReport su = metric_report(x, r.x_hat_adv);
  CHECK(st.psnr == r.stealth.psnr);
  CHECK(st.ssim == r.stealth.ssim);
  CHECK(st.vif == r.stealth.vif);
  CHECK(st.mse == r.stealth.mse);
  CHECK(su.psnr == r.success.psnr);
  CHECK(su.vif == r.success.vif);
}

TEST_CASE("pgd") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 86);

  SUBCASE("zero budget returns the input") {
    AttackConfig c;
    c.mode = AttackMode::pgd;
    c.delta = 0.0;
    AttackResult r = run_pgd(x, codec, c);
    CHECK(max_abs_diff(r.x_adv, x) == 0.0);
  }
  SUBCASE("one step moves coordinates by exactly beta where the gradient is nonzero") {
    AttackConfig c;
    c.mode = AttackMode::pgd;
    c.delta = 0.01;
    c.pgd_iters = 1;
    AttackResult r = run_pgd(x, codec, c);
    const double beta = c.delta / 10.0;
    int moved = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = std::abs(r.x_adv.data[i] - x.data[i]);
      const bool still = d == 0.0;
      const bool stepped = std::abs(d - beta) <= 1e-15;
      CHECK((still || stepped));
      if (stepped) ++moved;
    }
    CHECK(moved > static_cast<int>(x.size()) / 2);
  }
  SUBCASE("budget projection holds over many iterations") {
    AttackConfig c;
    c.mode = AttackMode::pgd;
    c.delta = 0.02;
    c.pgd_iters = 50;
    AttackResult r = run_pgd(x, codec, c);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(r.x_adv.data[i] - x.data[i]) <= c.delta + 1e-15);
      CHECK(r.x_adv.data[i] >= 0.0);
      CHECK(r.x_adv.data[i] <= 1.0);
    }
    CHECK(r.success.psnr < psnr(x, x));
  }
}

TEST_CASE("pixel-logexp identity and budget") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 1, 87);
  AttackConfig c = fast_cfg();
  c.mode = AttackMode::pixel_logexp;

  SUBCASE("zero init and a single pass leave the image unchanged") {
    AttackConfig c2 = c;
    c2.init_noise_scale = 0.0;
    c2.max_iters = 1;
    c2.q_in = kPsnrCap;
    AttackResult r = run_pixel_logexp(x, codec, c2);
    CHECK(max_abs_diff(r.x_adv, x) == 0.0);  // log-exp identity is bit exact
  }
  SUBCASE("noise bounded by delta") {
    AttackConfig c2 = c;
    c2.max_iters = 30;
    AttackResult r = run_pixel_logexp(x, codec, c2);
    REQUIRE(r.pixel_noise.has_value());
    for (double v : r.pixel_noise->data) CHECK(std::abs(v) <= c2.delta + 1e-12);
  }
}

TEST_CASE("three-channel images run through the whole pipeline") {
  CodecContract codec = default_codec();
  Image x = synth_scene(48, 48, 3, 95);
  AttackConfig c = fast_cfg();
  c.max_iters = 25;
  AttackResult r = run_tmla(x, codec, c);
  CHECK(r.x_adv.channels == 3);
  CHECK(r.stealth.psnr > 20.0);
  for (double v : r.x_adv.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  REQUIRE(r.noise.has_value());
  CHECK(r.noise->ch.size() == 3);
}

TEST_CASE("frozen fixture trajectories: exact converged iterate counts") {
  // Regression pin from the first verified run of the 64x64 trio at
  // Q_in=50 / Q_out=clean-15, eta 1e-3, tolerances 1.8. A change here means
  // the optimization numerics moved; re-freeze deliberately or investigate.
  CodecContract codec = default_codec();
  auto trio = synth_fixture_trio(64, 64, 1, 3000);
  const int expected_iters[3] = {216, 172, 173};
  for (std::size_t i = 0; i < trio.size(); ++i) {
    auto [rec, bpp] = codec.forward(trio[i]);
    AttackConfig cfg;
    cfg.q_in = 50;
    cfg.q_out = psnr(rec, trio[i]) - 15;
    cfg.eta = 1e-3;
    cfg.max_iters = 2000;
    cfg.tol_in = 1.8;
    cfg.tol_out = 1.8;
    cfg.seed = 3000 + static_cast<std::uint64_t>(i);
    AttackResult r = run_tmla(trio[i], codec, cfg);
    CHECK(r.converged);
    CHECK(r.iterations == expected_iters[i]);
  }
}

TEST_CASE("batch attack") {
  CodecContract codec = default_codec();
  std::vector<Image> images = {synth_scene(48, 48, 1, 90), synth_scene(48, 48, 1, 90)};
  AttackConfig c = fast_cfg();
  c.max_iters = 15;

  SUBCASE("identical images with identical seeds give identical rows") {
    AttackConfig c0 = c;
    auto entries = batch_attack(images, {"a", "b"}, codec, c0, 1);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].ok);
    CHECK(entries[1].ok);
    // per-image seed differs (seed + index), so results legitimately differ;
    // rerun with the second image's seed to confirm per-image determinism
    AttackConfig c1 = c0;
    c1.seed = c0.seed + 1;
    AttackResult direct = run_attack(images[1], codec, c1);
    CHECK(max_abs_diff(direct.x_adv, entries[1].result.x_adv) == 0.0);
  }
  SUBCASE("jobs > 1 produces the same results in the same order") {
    auto serial = batch_attack(images, {"a", "b"}, codec, c, 1);
    auto parallel = batch_attack(images, {"a", "b"}, codec, c, 2);
    for (std::size_t i = 0; i < serial.size(); ++i) {
      CHECK(serial[i].name == parallel[i].name);
      CHECK(max_abs_diff(serial[i].result.x_adv, parallel[i].result.x_adv) == 0.0);
    }
  }
  SUBCASE("per-image failures recorded, batch continues") {
    std::vector<Image> bad = {images[0], Image(3, 3, 1, 0.5)};  // too small for S=3
    auto entries = batch_attack(bad, {"good", "tiny"}, codec, c, 1);
    CHECK(entries[0].ok);
    CHECK_FALSE(entries[1].ok);
    CHECK_FALSE(entries[1].error.empty());
  }
  SUBCASE("empty manifest rejected") {
    CHECK_THROWS(batch_attack({}, {}, codec, c, 1));
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "tmla/attack.hpp"
#include "tmla/defense.hpp"
#include "tmla/metrics.hpp"
#include "tmla/synth.hpp"

using namespace tmla;
using testutil::max_abs_diff;

TEST_CASE("config validation") {
  DefenseConfig d;
  d.delta = -0.1;
  CHECK_THROWS(d.validate());
  d = DefenseConfig{};
  d.iters = 0;
  CHECK_THROWS(d.validate());
  CHECK_NOTHROW(DefenseConfig{}.validate());
}

TEST_CASE("zero budget is a no-op: outputs equal the input's codec pass") {
  CodecContract codec = make_surrogate_codec(SurrogateCodecParams{});
  Image x = synth_scene(24, 24, 1, 70);
  DefenseConfig d;
  d.delta = 0.0;
  DefenseResult r = run_defense(x, codec, d);
  CHECK(max_abs_diff(r.x_defended, x) == 0.0);
  auto [rec, bpp] = codec.forward(x);
  CHECK(max_abs_diff(r.x_hat_defended, rec) == 0.0);
  for (double v : r.noise.data) CHECK(v == 0.0);
}

TEST_CASE("zero-initialized noise on an unattacked input reproduces the clean pass") {
  CodecContract codec = make_surrogate_codec(SurrogateCodecParams{});
  Image x = synth_scene(24, 24, 1, 71);
  DefenseConfig d;
  d.iters = 1;
  d.init_scale = 0.0;
  DefenseResult r = run_defense(x, codec, d);
  auto [rec, bpp] = codec.forward(x);
  CHECK(max_abs_diff(r.x_hat_defended, rec) == 0.0);
}

TEST_CASE("budget and range invariants, objective never above the start") {
  CodecContract codec = make_surrogate_codec(SurrogateCodecParams{});
  Image x = synth_scene(24, 24, 1, 72);
  DefenseConfig d;
  d.delta = 0.02;
  d.iters = 40;
  d.use_adam = true;
  DefenseResult r = run_defense(x, codec, d);
  for (double v : r.noise.data) CHECK(std::abs(v) <= d.delta + 1e-15);
  for (double v : r.x_defended.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(r.objective_best <= r.objective_init);
  for (double o : r.objective_trace) CHECK(r.objective_best <= o);
}

TEST_CASE("defense recovers reconstruction quality on an attacked fixture") {
  SurrogateCodecParams p;
  CodecContract codec = make_surrogate_codec(p);
  auto trio = synth_fixture_trio(64, 64, 1, 3000);
  auto [clean_rec, b0] = codec.forward(trio[0]);

  AttackConfig ac;
  ac.q_in = 50;
  ac.q_out = psnr(clean_rec, trio[0]) - 15;
  ac.eta = 1e-3;
  ac.max_iters = 600;
  ac.tol_in = 1.8;
  ac.tol_out = 1.8;
  ac.seed = 3000;
  AttackResult atk = run_tmla(trio[0], codec, ac);

  auto [atk_rec, b1] = codec.forward(atk.x_adv);
  const double before = psnr(atk_rec, atk.x_adv);

  DefenseConfig dc;
  dc.delta = 0.03;
  dc.iters = 500;
  dc.use_adam = true;
  dc.adam_eta = 2e-3;
  dc.seed = 99;
  DefenseResult dr = run_defense(atk.x_adv, codec, dc);
  const double after = psnr(dr.x_hat_defended, atk.x_adv);
  CHECK(after - before >= 5.0);
}

TEST_CASE("deterministic given identical config") {
  CodecContract codec = make_surrogate_codec(SurrogateCodecParams{});
  Image x = synth_scene(24, 24, 1, 73);
  DefenseConfig d;
  d.iters = 20;
  d.use_adam = true;
  DefenseResult r1 = run_defense(x, codec, d);
  DefenseResult r2 = run_defense(x, codec, d);
  CHECK(max_abs_diff(r1.x_defended, r2.x_defended) == 0.0);
}

#include <cmath>
#include <random>

#include "doctest.h"
#include "trajcraft/errors.hpp"
#include "trajcraft/metrics.hpp"
#include "unit/oracles.hpp"

using namespace trajcraft;

namespace {

ColorFrame constant(int w, int h, float v) { return ColorFrame(w, h, Rgb{v, v, v}); }

ColorFrame offset(const ColorFrame& f, float d) {
  ColorFrame out = f;
  for (Rgb& p : out.values()) p = {p.r + d, p.g + d, p.b + d};
  return out;
}

// Noise pattern in [-1, 1], fixed per seed, scaled by amplitude around mid-gray content.
ColorFrame noisy(const ColorFrame& base, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  ColorFrame out = base;
  for (Rgb& p : out.values()) {
    p.r += float(amplitude) * u(rng);
    p.g += float(amplitude) * u(rng);
    p.b += float(amplitude) * u(rng);
  }
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("identical frames hit the PSNR cap") {
    const ColorFrame a = oracle::random_frame(16, 16, 1);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(kPsnrCap == 99.0);
  }

  TEST_CASE("a uniform 16/255 offset gives the closed-form PSNR") {
    const ColorFrame a = constant(20, 12, 100.0f / 255.0f);
    const double expect = 20.0 * std::log10(255.0 / 16.0);
    CHECK(expect == doctest::Approx(24.07).epsilon(0.001));
    CHECK(std::abs(psnr(a, offset(a, 16.0f / 255.0f)) - expect) < 0.05);
    const ColorFrame r = oracle::random_frame(20, 12, 4, 0.0);
    CHECK(std::abs(psnr(r, offset(r, -16.0f / 255.0f)) - expect) < 0.05);
  }

  TEST_CASE("masked PSNR only looks at selected pixels") {
    ColorFrame a = oracle::random_frame(10, 10, 2);
    ColorFrame b = a;
    MaskFrame m(10, 10, 1);
    for (int c = 0; c < 10; ++c) {
      b.at(3, c) = Rgb{1, 0, 1};
      m.at(3, c) = 0;
    }
    CHECK(psnr(a, b, &m) == kPsnrCap);
    CHECK(psnr(a, b) < 40.0);
    CHECK_THROWS_AS(psnr(a, b, &(m = MaskFrame(10, 10, 0))), ValidationError);
  }

  TEST_CASE("video PSNR pools squared error over frames") {
    const ColorFrame a = constant(8, 8, 0.5f);
    const Video x = {a, a};
    const Video y = {a, offset(a, 0.1f)};
    // MSE = 0.01 / 2.
    CHECK(psnr(x, y) == doctest::Approx(10.0 * std::log10(1.0 / 0.005)).epsilon(1e-6));
    CHECK_THROWS_AS(psnr(x, Video{a}), ShapeError);
  }

  TEST_CASE("PSNR is symmetric") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const ColorFrame a = oracle::random_frame(17, 13, s);
      const ColorFrame b = oracle::random_frame(17, 13, s + 100);
      CHECK(psnr(a, b) == psnr(b, a));
    }
  }

  TEST_CASE("PSNR strictly decreases as noise amplitude grows") {
    const ColorFrame base = constant(32, 32, 0.5f);
    double previous = kPsnrCap + 1.0;
    for (double amp = 0.01; amp <= 0.45; amp += 0.02) {
      const double p = psnr(base, noisy(base, amp, 7));
      CHECK(p < previous);
      previous = p;
    }
  }

  TEST_CASE("SSIM of a frame with itself is one up to rounding") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const ColorFrame a = oracle::random_frame(24, 19, s);
      CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(ssim(constant(11, 11, 0.5f), constant(11, 11, 0.5f)) == 1.0);
  }

  TEST_CASE("SSIM matches the direct oracle") {
    const double flat = ssim(constant(16, 16, 0.0f), constant(16, 16, 1.0f));
    CHECK(std::abs(flat - oracle::ssim_direct(constant(16, 16, 0.0f), constant(16, 16, 1.0f))) < 1e-9);
    // Both means are constant, so only the luminance term is left: c1 / (1 + c1).
    CHECK(flat == doctest::Approx(1e-4 / (1.0 + 1e-4)).epsilon(1e-9));
    for (std::uint64_t s = 0; s < 6; ++s) {
      const ColorFrame a = oracle::random_frame(21, 15, s);
      const ColorFrame b = noisy(a, 0.1 * (s + 1), s);
      CHECK(std::abs(ssim(a, b) - oracle::ssim_direct(a, b)) < 1e-9);
    }
  }

  TEST_CASE("SSIM is bounded and symmetric") {
    for (std::uint64_t s = 0; s < 6; ++s) {
      const ColorFrame a = oracle::random_frame(20, 20, s);
      const ColorFrame b = oracle::random_frame(20, 20, s + 50);
      const double v = ssim(a, b);
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
      CHECK(v == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    }
  }

  TEST_CASE("SSIM needs a frame at least as large as the window") {
    CHECK_THROWS_AS(ssim(constant(10, 11, 0), constant(10, 11, 0)), ShapeError);
    CHECK_THROWS_AS(ssim(constant(11, 11, 0), constant(12, 11, 0)), ShapeError);
    CHECK_NOTHROW(ssim(constant(11, 11, 0), constant(11, 11, 0)));
  }

  TEST_CASE("video reports") {
    const Video a = {oracle::random_frame(16, 16, 1), oracle::random_frame(16, 16, 2)};
    MaskVideo m = {MaskFrame(16, 16, 1), MaskFrame(16, 16, 0)};
    m[1].at(0, 0) = 1;
    const VideoReport same = video_report(a, a, &m);
    CHECK(same.psnr == kPsnrCap);
    CHECK(same.ssim_mean == 1.0);
    CHECK(same.coverage == doctest::Approx((256 + 1) / 512.0));
    CHECK(video_report(a, a).coverage == 1.0);

    const Video b = {noisy(a[0], 0.1, 3), noisy(a[1], 0.2, 4)};
    const VideoReport one = video_report({a[0]}, {b[0]});
    CHECK(one.psnr == psnr(a[0], b[0]));
    CHECK(one.ssim_mean == ssim(a[0], b[0]));

    const VideoReport fwd = video_report(a, b);
    const VideoReport rev = video_report({a[1], a[0]}, {b[1], b[0]});
    CHECK(fwd.psnr == doctest::Approx(rev.psnr).epsilon(1e-12));
    CHECK(fwd.ssim_mean == doctest::Approx(rev.ssim_mean).epsilon(1e-12));
    CHECK(fwd.psnr == doctest::Approx((psnr(a[0], b[0]) + psnr(a[1], b[1])) / 2).epsilon(1e-12));

    const nlohmann::json j = fwd.to_json();
    CHECK(j.at("psnr") == fwd.psnr);
    CHECK(j.contains("ssim_mean"));
    CHECK(j.contains("coverage"));

    CHECK_THROWS_AS(video_report(a, {b[0]}), ShapeError);
    CHECK_THROWS_AS(video_report({}, {}), ShapeError);
    const MaskVideo empty = {MaskFrame(16, 16, 0), MaskFrame(16, 16, 0)};
    CHECK_THROWS_AS(video_report(a, b, &empty), ValidationError);
  }

  TEST_CASE("luma weights") {
    ColorFrame f(1, 1, Rgb{1.0f, 0.0f, 0.0f});
    CHECK(luma(f).at(0, 0) == doctest::Approx(0.299));
    f.at(0, 0) = {0.0f, 1.0f, 0.0f};
    CHECK(luma(f).at(0, 0) == doctest::Approx(0.587));
    f.at(0, 0) = {0.0f, 0.0f, 1.0f};
    CHECK(luma(f).at(0, 0) == doctest::Approx(0.114));
  }
}

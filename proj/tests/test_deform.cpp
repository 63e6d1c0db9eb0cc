#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "skssl/deform.hpp"
#include "skssl/error.hpp"
#include "skssl/rng.hpp"

using namespace skssl;
using testutil::make_seq;
using testutil::rand_seq;

namespace {

constexpr double kPi = std::numbers::pi;

// |eta| < 1/(1+pi) bounds |f'| below 1, so these are monotone by construction.
AxisDeform rand_monotone_axis(Rng& rng) {
  std::uniform_real_distribution<double> au(0.0, kPi - 0.1);
  std::uniform_real_distribution<double> eu(0.02, 0.2);
  const double a = au(rng);
  std::uniform_real_distribution<double> bu(a + 0.05, kPi);
  const double sign = (rng() & 1) ? 1.0 : -1.0;
  return AxisDeform(a, bu(rng), sign * eu(rng));
}

DeformSpec rand_monotone_spec(Rng& rng) {
  DeformSpec spec;
  if (rng() & 1) spec.x_axis.push_back(rand_monotone_axis(rng));
  if ((rng() & 1) || spec.x_axis.empty()) spec.y_axis.push_back(rand_monotone_axis(rng));
  spec.name = "rand";
  return spec;
}

}  // namespace

TEST_SUITE("deform") {

TEST_CASE("displacement matches hand-computed values") {
  CHECK(std::abs(displacement(AxisDeform(0.0, kPi, 0.45), 0.25) - 0.05625) < 1e-15);
  CHECK(std::abs(displacement(AxisDeform(0.0, kPi, 0.45), 0.5)) < 1e-15);
  CHECK(std::abs(displacement(AxisDeform(0.0, kPi / 2.0, -0.35), 0.5) + 0.0875) < 1e-15);
}

TEST_CASE("deform_coord curve values are exact at the quarter point") {
  // 0.25 + eta*0.25*(sin cos at pi/4 = 1/2) lands on an exactly representable
  // double for both intensities.
  CHECK(deform_coord(AxisDeform(0.0, kPi, 0.45), 0.25) == 0.30625);
  CHECK(deform_coord(AxisDeform(0.0, kPi, -0.35), 0.25) == 0.20625);
}

TEST_CASE("endpoints are fixed exactly for any valid bounds") {
  Rng rng = make_rng(7, "deform/endpoints");
  std::uniform_real_distribution<double> au(0.0, kPi - 0.01);
  std::uniform_real_distribution<double> eu(-3.0, 3.0);
  for (int i = 0; i < 300; ++i) {
    const double a = au(rng);
    std::uniform_real_distribution<double> bu(a + 0.01, kPi);
    const AxisDeform axis(a, bu(rng), eu(rng));
    CHECK(displacement(axis, 0.0) == 0.0);
    CHECK(displacement(axis, 1.0) == 0.0);
    CHECK(deform_coord(axis, 0.0) == 0.0);
    CHECK(deform_coord(axis, 1.0) == 1.0);
  }
}

TEST_CASE("domain violations are rejected") {
  CHECK_THROWS_AS(AxisDeform(-0.1, 1.0, 0.3), ValidationError);
  CHECK_THROWS_AS(AxisDeform(1.0, 1.0, 0.3), ValidationError);
  CHECK_THROWS_AS(AxisDeform(0.5, 0.2, 0.3), ValidationError);
  CHECK_THROWS_AS(AxisDeform(0.0, kPi + 0.01, 0.3), ValidationError);
  const AxisDeform ok(0.0, kPi, 0.45);
  CHECK_THROWS_AS(displacement(ok, -0.01), ValidationError);
  CHECK_THROWS_AS(displacement(ok, 1.01), ValidationError);
  CHECK_NOTHROW(displacement(ok, 0.0));
  CHECK_NOTHROW(displacement(ok, 1.0));
}

TEST_CASE("validate_monotone grid check") {
  CHECK(validate_monotone(AxisDeform(0.0, kPi, 0.45)));
  CHECK(validate_monotone(AxisDeform(0.0, kPi, 0.0)));
  CHECK_FALSE(validate_monotone(AxisDeform(0.0, kPi, 3.0)));
  // Full-range eta = -0.35 has D'(1) = 1 - 0.35*pi < 0: decreasing near 1.
  CHECK_FALSE(validate_monotone(AxisDeform(0.0, kPi, -0.35)));
}

TEST_CASE("random monotone axes preserve strict order") {
  Rng rng = make_rng(7, "deform/order");
  std::uniform_real_distribution<double> tu(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const AxisDeform axis = rand_monotone_axis(rng);
    CHECK(validate_monotone(axis));
    double t0 = tu(rng), t1 = tu(rng);
    if (t0 > t1) std::swap(t0, t1);
    if (t1 - t0 < 1e-9) continue;
    CHECK(deform_coord(axis, t0) < deform_coord(axis, t1));
  }
}

TEST_CASE("presets define the documented axes") {
  const DeformSpec hc = preset_spec({PresetKind::HC, 0.45});
  REQUIRE(hc.x_axis.size() == 1);
  CHECK(hc.y_axis.empty());
  CHECK(hc.x_axis[0].a == 0.0);
  CHECK(hc.x_axis[0].b == kPi);
  CHECK(hc.x_axis[0].eta == 0.45);
  CHECK(hc.name == "HC");

  const DeformSpec vc = preset_spec({PresetKind::VC, 0.45});
  CHECK(vc.x_axis.empty());
  REQUIRE(vc.y_axis.size() == 1);
  CHECK(vc.y_axis[0].b == kPi);
  CHECK(vc.y_axis[0].eta == 0.45);

  const DeformSpec cc = preset_spec({PresetKind::CC, 0.3});
  REQUIRE(cc.x_axis.size() == 1);
  REQUIRE(cc.y_axis.size() == 1);
  CHECK(cc.x_axis[0].eta == 0.3);
  CHECK(cc.y_axis[0].eta == 0.3);

  const DeformSpec lc = preset_spec({PresetKind::LC, 0.45});
  REQUIRE(lc.x_axis.size() == 1);
  CHECK(lc.y_axis.empty());
  CHECK(lc.x_axis[0].b == kPi / 2.0);
  CHECK(lc.x_axis[0].eta == -0.45);

  const DeformSpec rc = preset_spec({PresetKind::RC, 0.45});
  REQUIRE(rc.x_axis.size() == 1);
  CHECK(rc.x_axis[0].b == kPi / 2.0);
  CHECK(rc.x_axis[0].eta == 0.45);

  CHECK(kDefaultIntensity == 0.45);
}

TEST_CASE("preset names round-trip and zero intensity is rejected") {
  for (auto kind : {PresetKind::HC, PresetKind::CC, PresetKind::VC, PresetKind::LC,
                    PresetKind::RC}) {
    auto back = preset_from_name(preset_name(kind));
    REQUIRE(back.has_value());
    CHECK(*back == kind);
  }
  CHECK_FALSE(preset_from_name("XX").has_value());
  CHECK_THROWS_AS(preset_spec({PresetKind::LC, 0.0}), ValidationError);
  CHECK_THROWS_AS(preset_spec({PresetKind::HC, -0.1}), ValidationError);
}

TEST_CASE("a named identity spec is invalid, the anonymous identity is fine") {
  DeformSpec ghost;
  ghost.name = "ghost";
  CHECK_THROWS_AS(validate_spec(ghost), ValidationError);

  const PointSeq seq = make_seq({{{0.1, 0.2}, {0.8, 0.9}}, {{0.5, 0.5}}});
  const PointSeq out = apply_deform(DeformSpec::identity(), seq);
  REQUIRE(out.points.size() == seq.points.size());
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    CHECK(out.points[i].x == seq.points[i].x);
    CHECK(out.points[i].y == seq.points[i].y);
    CHECK(out.points[i].stroke_end == seq.points[i].stroke_end);
  }
}

TEST_CASE("apply_deform maps coordinates and leaves structure alone") {
  const PointSeq seq = make_seq({{{0.25, 0.6}, {0.5, 0.3}}, {{0.0, 1.0}}}, 3);
  const DeformSpec hc = preset_spec({PresetKind::HC, 0.45});
  const PointSeq out = apply_deform(hc, seq);

  REQUIRE(out.points.size() == 3);
  CHECK(out.points[0].x == 0.30625);
  CHECK(std::abs(out.points[1].x - deform_coord(hc.x_axis[0], 0.5)) == 0.0);
  CHECK(out.points[2].x == 0.0);
  // y axis untouched, bit for bit.
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.points[i].y == seq.points[i].y);
  CHECK(out.points[0].stroke_end == false);
  CHECK(out.points[1].stroke_end == true);
  CHECK(out.points[2].stroke_end == true);
  CHECK(out.category_id == 3);
}

TEST_CASE("apply_deform rejects bad input and bad specs") {
  const DeformSpec hc = preset_spec({PresetKind::HC, 0.45});
  CHECK_THROWS_AS(apply_deform(hc, make_seq({{{1.5, 0.5}}})), ValidationError);
  CHECK_THROWS_AS(apply_deform(hc, make_seq({{{0.5, -0.1}}})), ValidationError);

  DeformSpec wild;
  wild.name = "wild";
  wild.x_axis.push_back(AxisDeform(0.0, kPi, 3.0));
  CHECK_THROWS_AS(apply_deform(wild, make_seq({{{0.5, 0.5}}})), ValidationError);
}

TEST_CASE("apply_deform keeps random sketches inside the unit square") {
  Rng rng = make_rng(7, "deform/range");
  for (int i = 0; i < 50; ++i) {
    const DeformSpec spec = rand_monotone_spec(rng);
    const PointSeq out = apply_deform(spec, rand_seq(rng));
    for (const auto& p : out.points) {
      CHECK(p.x >= 0.0);
      CHECK(p.x <= 1.0);
      CHECK(p.y >= 0.0);
      CHECK(p.y <= 1.0);
    }
  }
}

TEST_CASE("compose concatenates per-axis chains") {
  const DeformSpec vc = preset_spec({PresetKind::VC, 0.45});
  const DeformSpec lc = preset_spec({PresetKind::LC, 0.45});
  const DeformSpec both = compose(vc, lc);
  REQUIRE(both.x_axis.size() == 1);
  REQUIRE(both.y_axis.size() == 1);
  CHECK(both.x_axis[0].eta == lc.x_axis[0].eta);
  CHECK(both.y_axis[0].eta == vc.y_axis[0].eta);
  CHECK(both.name == "VC&LC");

  // Sequential application agrees with the composed spec, bit for bit.
  Rng rng = make_rng(7, "deform/compose");
  const PointSeq seq = rand_seq(rng);
  const PointSeq two_step = apply_deform(lc, apply_deform(vc, seq));
  const PointSeq one_step = apply_deform(both, seq);
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    CHECK(one_step.points[i].x == two_step.points[i].x);
    CHECK(one_step.points[i].y == two_step.points[i].y);
  }
}

TEST_CASE("composition with the identity preserves the other spec") {
  const DeformSpec hc = preset_spec({PresetKind::HC, 0.45});
  for (const DeformSpec& spec :
       {compose(DeformSpec::identity(), hc), compose(hc, DeformSpec::identity())}) {
    CHECK(spec.name == "HC");
    REQUIRE(spec.x_axis.size() == 1);
    CHECK(spec.x_axis[0].eta == 0.45);
    CHECK(spec.y_axis.empty());
  }
}

TEST_CASE("self-composition chains the displacement") {
  const DeformSpec hc = preset_spec({PresetKind::HC, 0.25});
  const DeformSpec twice = compose(hc, hc);
  CHECK(twice.name == "HC&HC");
  REQUIRE(twice.x_axis.size() == 2);
  const double one = deform_coord(hc.x_axis[0], 0.25);
  CHECK(apply_axis_chain(twice.x_axis, 0.25) == deform_coord(hc.x_axis[0], one));
}

TEST_CASE("composition is associative") {
  Rng rng = make_rng(7, "deform/assoc");
  for (int i = 0; i < 20; ++i) {
    const DeformSpec a = rand_monotone_spec(rng);
    const DeformSpec b = rand_monotone_spec(rng);
    const DeformSpec c = rand_monotone_spec(rng);
    const DeformSpec left = compose(compose(a, b), c);
    const DeformSpec right = compose(a, compose(b, c));
    const PointSeq seq = rand_seq(rng);
    const PointSeq lout = apply_deform(left, seq);
    const PointSeq rout = apply_deform(right, seq);
    for (std::size_t k = 0; k < seq.points.size(); ++k) {
      CHECK(std::abs(lout.points[k].x - rout.points[k].x) < 1e-12);
      CHECK(std::abs(lout.points[k].y - rout.points[k].y) < 1e-12);
    }
  }
}

TEST_CASE("quarter-turn rotation examples") {
  const PointSeq a = rotate(make_seq({{{0.75, 0.5}}}), RotationAngle::Deg180);
  CHECK(a.points[0].x == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(a.points[0].y == doctest::Approx(0.5).epsilon(1e-12));

  const PointSeq b = rotate(make_seq({{{1.0, 0.5}}}), RotationAngle::Deg90);
  CHECK(b.points[0].x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.points[0].y == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rotation follows (x, y) -> (1 - y, x) and is 4-periodic") {
  Rng rng = make_rng(7, "deform/rotate");
  const PointSeq seq = rand_seq(rng);

  const PointSeq quarter = rotate(seq, RotationAngle::Deg90);
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    CHECK(quarter.points[i].x == 1.0 - seq.points[i].y);
    CHECK(quarter.points[i].y == seq.points[i].x);
    CHECK(quarter.points[i].stroke_end == seq.points[i].stroke_end);
  }

  PointSeq four = seq;
  for (int k = 0; k < 4; ++k) four = rotate(four, RotationAngle::Deg90);
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    CHECK(std::abs(four.points[i].x - seq.points[i].x) < 1e-12);
    CHECK(std::abs(four.points[i].y - seq.points[i].y) < 1e-12);
  }

  const PointSeq zero = rotate(seq, RotationAngle::Deg0);
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    CHECK(zero.points[i].x == seq.points[i].x);
    CHECK(zero.points[i].y == seq.points[i].y);
  }

  // 90 + 270 cancel within the same tolerance.
  const PointSeq back = rotate(quarter, RotationAngle::Deg270);
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    CHECK(std::abs(back.points[i].x - seq.points[i].x) < 1e-12);
    CHECK(std::abs(back.points[i].y - seq.points[i].y) < 1e-12);
  }
}

}  // TEST_SUITE

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skssl/stroke.hpp"

namespace skssl {

// One nonlinear axis displacement. The induced coordinate map is
//   D(t) = t + f(t),  f(t) = eta * t * (g((b-a)*t + a) - g((b-a)*1 + a)),
// with g(u) = sin(u)*cos(u). By construction f(0) = 0 and f(1) = 0 exactly,
// so D fixes both endpoints. a and b are phase-region bounds in radians,
// 0 <= a < b <= pi; eta sets the warp intensity.
struct AxisDeform {
  double a = 0.0;
  double b = 0.0;
  double eta = 0.0;

  AxisDeform() = default;
  AxisDeform(double a_, double b_, double eta_);  // validates bounds
};

// f(t) for t in [0,1]. Throws ValidationError outside the domain.
double displacement(const AxisDeform& axis, double t);

// D(t) = t + f(t).
double deform_coord(const AxisDeform& axis, double t);

// True iff D is strictly increasing on a 10,001-point uniform grid over [0,1].
bool validate_monotone(const AxisDeform& axis);

// A named deformation: an ordered chain of axis maps per direction (empty
// chain = identity on that axis). Chains make composition exact and keep
// every link individually monotone.
struct DeformSpec {
  std::vector<AxisDeform> x_axis;
  std::vector<AxisDeform> y_axis;
  std::string name;

  bool is_identity() const { return x_axis.empty() && y_axis.empty(); }
  static DeformSpec identity() { return {}; }
};

double apply_axis_chain(const std::vector<AxisDeform>& chain, double t);

// Validates all axis links (monotonicity included), then maps every point.
// Stroke structure and pen states are untouched. Never clamps.
PointSeq apply_deform(const DeformSpec& spec, const PointSeq& seq);

// Throws ValidationError if some axis link fails bounds or monotonicity
// checks, or if a named spec is the identity.
void validate_spec(const DeformSpec& spec);

// The five drawing-style presets. Full-range (a=0, b=pi) positive intensity
// compresses toward the centerline of an axis; half-range (a=0, b=pi/2)
// shifts mass left (eta<0) or right (eta>0).
enum class PresetKind { HC, CC, VC, LC, RC };

inline constexpr double kDefaultIntensity = 0.45;

struct Preset {
  PresetKind kind = PresetKind::HC;
  double intensity = kDefaultIntensity;
};

DeformSpec preset_spec(const Preset& p);
std::optional<PresetKind> preset_from_name(const std::string& name);
std::string preset_name(PresetKind kind);

// Apply `first`, then `second` (per-axis chain concatenation). Composition of
// monotone endpoint-fixing maps is monotone and endpoint-fixing.
DeformSpec compose(const DeformSpec& first, const DeformSpec& second);

// Quarter-turn rotations about (0.5, 0.5) in the normalized stroke frame.
enum class RotationAngle : int { Deg0 = 0, Deg90 = 90, Deg180 = 180, Deg270 = 270 };

inline constexpr RotationAngle kRotations[4] = {
    RotationAngle::Deg0, RotationAngle::Deg90, RotationAngle::Deg180,
    RotationAngle::Deg270};

PointSeq rotate(const PointSeq& seq, RotationAngle angle);

}  // namespace skssl

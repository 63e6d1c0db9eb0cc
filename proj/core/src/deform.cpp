#include "skssl/deform.hpp"

#include <cmath>
#include <numbers>

#include "skssl/error.hpp"

namespace skssl {
namespace {

constexpr double kPi = std::numbers::pi;

double sincos_prod(double u) { return std::sin(u) * std::cos(u); }

void validate_bounds(double a, double b) {
  if (!(a >= 0.0) || !(a < b) || !(b <= kPi)) {
    throw ValidationError("axis deform bounds must satisfy 0 <= a < b <= pi, got a=" +
                          std::to_string(a) + " b=" + std::to_string(b));
  }
}

}  // namespace

AxisDeform::AxisDeform(double a_, double b_, double eta_) : a(a_), b(b_), eta(eta_) {
  validate_bounds(a, b);
}

double displacement(const AxisDeform& axis, double t) {
  validate_bounds(axis.a, axis.b);
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ValidationError("displacement parameter must lie in [0,1], got " +
                          std::to_string(t));
  }
  const double span = axis.b - axis.a;
  // Subtrahend uses the same expression at t=1 so f(1) cancels exactly.
  return axis.eta * t * (sincos_prod(span * t + axis.a) - sincos_prod(span * 1.0 + axis.a));
}

double deform_coord(const AxisDeform& axis, double t) {
  return t + displacement(axis, t);
}

bool validate_monotone(const AxisDeform& axis) {
  validate_bounds(axis.a, axis.b);
  constexpr int kGrid = 10000;  // 10,001 samples
  double prev = deform_coord(axis, 0.0);
  for (int i = 1; i <= kGrid; ++i) {
    const double t = static_cast<double>(i) / kGrid;
    const double cur = deform_coord(axis, t);
    if (!(cur > prev)) return false;
    prev = cur;
  }
  return true;
}

double apply_axis_chain(const std::vector<AxisDeform>& chain, double t) {
  for (const auto& axis : chain) t = deform_coord(axis, t);
  return t;
}

void validate_spec(const DeformSpec& spec) {
  if (!spec.name.empty() && spec.is_identity()) {
    throw ValidationError("named deformation '" + spec.name + "' has identity axes");
  }
  for (const auto* chain : {&spec.x_axis, &spec.y_axis}) {
    for (const auto& axis : *chain) {
      validate_bounds(axis.a, axis.b);
      if (!validate_monotone(axis)) {
        throw ValidationError("axis deform (a=" + std::to_string(axis.a) +
                              ", b=" + std::to_string(axis.b) +
                              ", eta=" + std::to_string(axis.eta) +
                              ") is not strictly monotone on [0,1]");
      }
    }
  }
}

PointSeq apply_deform(const DeformSpec& spec, const PointSeq& seq) {
  validate_spec(spec);
  PointSeq out = seq;
  for (auto& p : out.points) {
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
      throw ValidationError("apply_deform requires normalized coordinates in [0,1]");
    }
    p.x = apply_axis_chain(spec.x_axis, p.x);
    p.y = apply_axis_chain(spec.y_axis, p.y);
  }
  return out;
}

DeformSpec preset_spec(const Preset& p) {
  if (!(p.intensity > 0.0)) {
    throw ValidationError("preset intensity must be positive, got " +
                          std::to_string(p.intensity));
  }
  const double i = p.intensity;
  DeformSpec spec;
  spec.name = preset_name(p.kind);
  switch (p.kind) {
    case PresetKind::HC:
      spec.x_axis.push_back(AxisDeform(0.0, kPi, +i));
      break;
    case PresetKind::VC:
      spec.y_axis.push_back(AxisDeform(0.0, kPi, +i));
      break;
    case PresetKind::CC:
      spec.x_axis.push_back(AxisDeform(0.0, kPi, +i));
      spec.y_axis.push_back(AxisDeform(0.0, kPi, +i));
      break;
    case PresetKind::LC:
      spec.x_axis.push_back(AxisDeform(0.0, kPi / 2.0, -i));
      break;
    case PresetKind::RC:
      spec.x_axis.push_back(AxisDeform(0.0, kPi / 2.0, +i));
      break;
  }
  validate_spec(spec);
  return spec;
}

std::optional<PresetKind> preset_from_name(const std::string& name) {
  if (name == "HC") return PresetKind::HC;
  if (name == "CC") return PresetKind::CC;
  if (name == "VC") return PresetKind::VC;
  if (name == "LC") return PresetKind::LC;
  if (name == "RC") return PresetKind::RC;
  return std::nullopt;
}

std::string preset_name(PresetKind kind) {
  switch (kind) {
    case PresetKind::HC: return "HC";
    case PresetKind::CC: return "CC";
    case PresetKind::VC: return "VC";
    case PresetKind::LC: return "LC";
    case PresetKind::RC: return "RC";
  }
  throw StateError("unreachable preset kind");
}

DeformSpec compose(const DeformSpec& first, const DeformSpec& second) {
  DeformSpec out;
  out.x_axis = first.x_axis;
  out.x_axis.insert(out.x_axis.end(), second.x_axis.begin(), second.x_axis.end());
  out.y_axis = first.y_axis;
  out.y_axis.insert(out.y_axis.end(), second.y_axis.begin(), second.y_axis.end());
  if (!first.name.empty() && !second.name.empty()) {
    out.name = first.name + "&" + second.name;
  } else {
    out.name = first.name.empty() ? second.name : first.name;
  }
  return out;
}

PointSeq rotate(const PointSeq& seq, RotationAngle angle) {
  PointSeq out = seq;
  for (auto& p : out.points) {
    const double x = p.x;
    const double y = p.y;
    switch (angle) {
      case RotationAngle::Deg0:
        break;
      case RotationAngle::Deg90:
        p.x = 1.0 - y;
        p.y = x;
        break;
      case RotationAngle::Deg180:
        p.x = 1.0 - x;
        p.y = 1.0 - y;
        break;
      case RotationAngle::Deg270:
        p.x = y;
        p.y = 1.0 - x;
        break;
    }
  }
  return out;
}

}  // namespace skssl

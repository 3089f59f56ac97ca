#ifndef PAWGAN_TYPES_HPP
#define PAWGAN_TYPES_HPP

// Shared domain types: the 7-point facial landmark schema, crop boxes,
// dataset splits and provenance tags.

#include <array>
#include <cmath>
#include <string>

#include "pawgan/core.hpp"

namespace pawgan {

inline constexpr int kLandmarkCount = 7;

// Fixed point order. Mirroring swaps the left/right identities below.
inline constexpr std::array<const char*, kLandmarkCount> kLandmarkNames = {
    "left_ear_1", "left_ear_2", "right_ear_1", "right_ear_2",
    "left_eye", "right_eye", "nose"};

inline constexpr std::array<int, kLandmarkCount> kMirrorSwap = {2, 3, 0, 1, 5, 4, 6};

struct Vec2 {
  double x = 0;
  double y = 0;
};

// 7 named 2-D keypoints in pixel space. Coordinates are continuous with
// pixel centers at integer+0.5; they may lie outside the image frame when a
// model extrapolates (flagged by callers, never clamped here).
struct LandmarkSet {
  std::array<Vec2, kLandmarkCount> points{};

  bool all_finite() const {
    for (const auto& p : points)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    return true;
  }

  bool any_inside(double width, double height) const {
    for (const auto& p : points)
      if (p.x >= 0 && p.x <= width && p.y >= 0 && p.y <= height) return true;
    return false;
  }

  // Axis-aligned bounds of the point set.
  void bounds(double& min_x, double& min_y, double& max_x, double& max_y) const {
    min_x = min_y = 1e300;
    max_x = max_y = -1e300;
    for (const auto& p : points) {
      min_x = std::min(min_x, p.x);
      min_y = std::min(min_y, p.y);
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
  }
};

// Half-open integer pixel box [x0,x1) x [y0,y1).
struct CropBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool valid() const { return x0 < x1 && y0 < y1; }
  bool inside(int image_w, int image_h) const {
    return x0 >= 0 && y0 >= 0 && x1 <= image_w && y1 <= image_h && valid();
  }
  bool operator==(const CropBox&) const = default;
};

enum class Split { train, test, val };
enum class Provenance { real, synthetic };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::val: return "val";
  }
  throw Error("bad split enum");
}

inline std::string to_string(Provenance p) {
  return p == Provenance::real ? "real" : "synthetic";
}

inline Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "val") return Split::val;
  throw Error("unknown split: '" + std::string(s) + "'");
}

inline Provenance provenance_from_string(std::string_view s) {
  if (s == "real") return Provenance::real;
  if (s == "synthetic") return Provenance::synthetic;
  throw Error("unknown provenance: '" + std::string(s) + "'");
}

}  // namespace pawgan

#endif

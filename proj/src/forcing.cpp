#include "sgd/forcing.hpp"

#include <algorithm>

#include "sgd/error.hpp"

namespace sgd {

std::vector<std::string> builtin_forcing_names() { return {"paper_rotational", "box_rotational", "zero"}; }

VectorField builtin_forcing(const std::string& name) {
  if (name == "paper_rotational") {
    return [](const Point& p, double t) -> Vec3 {
      const double ramp = std::min(t, 1.0);
      const double radial = 1.0 - p[0] * p[0] - p[1] * p[1];
      return {-4.0 * ramp * p[1] * radial, 4.0 * ramp * p[0] * radial, 0.0};
    };
  }
  if (name == "box_rotational") {
    return [](const Point& p, double t) -> Vec3 {
      const double ramp = std::min(t, 1.0);
      const double x = 2.0 * p[0] - 1.0, y = 2.0 * p[1] - 1.0;
      const double radial = std::max(0.0, 1.0 - x * x - y * y);
      return {-4.0 * ramp * y * radial, 4.0 * ramp * x * radial, 0.0};
    };
  }
  if (name == "zero") {
    return [](const Point&, double) -> Vec3 { return {0.0, 0.0, 0.0}; };
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown forcing '" + name + "'");
}

}  // namespace sgd

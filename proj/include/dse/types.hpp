#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Opaque robot identifier. Two-digit names (r12, r18, ...) map directly
/// onto the integer value.
enum class RobotId : std::int32_t {};

constexpr std::int32_t to_int(RobotId id) { return static_cast<std::int32_t>(id); }

inline std::ostream& operator<<(std::ostream& os, RobotId id) { return os << 'r' << to_int(id); }

/// Zero-based index of a team in input order.
using TeamIndex = std::size_t;

/// Discrete simulation time step.
using TimeStep = long;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dse

#pragma once

#include "armsafe/types.hpp"

namespace armsafe {

/// What the outer loop believes about the plant:
///   qdd = m_bar^-1 (-c_bar dq - g_bar + kd_bar dq_d).
/// With c_bar = 0 and g_bar = 0 this is the reduced model qdd = b0 dq_d,
/// b0 = m_bar^-1 kd_bar. When the inner loop outputs volts, kd_bar is the
/// effective gain (derivative gain times the voltage-to-torque map).
struct NominalModel {
  Mat3 m_bar = Mat3::Identity();
  Mat3 c_bar = Mat3::Zero();
  Vec3 g_bar = Vec3::Zero();
  Vec3 kd_bar = Vec3::Ones();

  static NominalModel reduced(const Mat3& m_bar, const Vec3& kd_bar) {
    NominalModel n;
    n.m_bar = m_bar;
    n.kd_bar = kd_bar;
    return n;
  }

  /// Throws InvalidModel unless m_bar is SPD and kd_bar > 0.
  void validate() const;

  /// F(x) = m_bar^-1 (-c_bar dq - g_bar).
  Vec3 drift(const Vec3& dq) const;
  /// G = m_bar^-1 kd_bar (the input gain b0).
  Mat3 input_gain() const;
  /// kd_bar^-1 m_bar, the map from a desired acceleration to a velocity command.
  Mat3 inverse_gain() const;
};

}  // namespace armsafe

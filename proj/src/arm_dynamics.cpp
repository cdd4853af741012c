#include "armsafe/arm_dynamics.hpp"

#include <array>
#include <cmath>
#include <string>

#include "armsafe/errors.hpp"

namespace armsafe {
namespace {

// A point fixed in the arm plane at distance `upper` along the upper arm and
// `fore` along the forearm. Everything is expressed in the waist-rotated
// ("local") frame; rotating by q1 does not change norms.
struct PlanarPoint {
  double rho;  // horizontal reach
  double z;    // height
  double rho_f;  // forearm contribution to rho
  double z_f;    // forearm contribution to z
};

PlanarPoint planar_point(const Vec3& q, double upper, double fore) {
  const double elev = q[1] - q[2];
  PlanarPoint p{};
  p.rho_f = fore * std::cos(elev);
  p.z_f = fore * std::sin(elev);
  p.rho = upper * std::cos(q[1]) + p.rho_f;
  p.z = upper * std::sin(q[1]) + p.z_f;
  return p;
}

// Local-frame linear-velocity Jacobian. Rows: radial, lateral, vertical.
Mat3 local_jacobian(const PlanarPoint& p, double d) {
  Mat3 j;
  j << -d, -p.z, p.z_f,
       p.rho, 0.0, 0.0,
       0.0, p.rho, -p.rho_f;
  return j;
}

// d(local_jacobian)/dq2 and d(local_jacobian)/dq3; d/dq1 vanishes locally.
Mat3 local_jacobian_dq2(const PlanarPoint& p) {
  Mat3 j;
  j << 0.0, -p.rho, p.rho_f,
       -p.z, 0.0, 0.0,
       0.0, -p.z, p.z_f;
  return j;
}

Mat3 local_jacobian_dq3(const PlanarPoint& p) {
  Mat3 j;
  j << 0.0, p.rho_f, -p.rho_f,
       p.z_f, 0.0, 0.0,
       0.0, p.z_f, -p.z_f;
  return j;
}

struct MassPoint {
  double mass;
  double upper;
  double fore;
};

// Link 2 COM, link 3 COM and the payload; link 1's COM is on the waist axis.
std::array<MassPoint, 3> mass_points(const ArmParams& a) {
  return {{{a.masses[1], a.com_offsets[1], 0.0},
           {a.masses[2], a.link_lengths[1], a.com_offsets[2]},
           {a.payload_mass, a.link_lengths[1], a.link_lengths[2]}}};
}

Mat3 rotational_inertia(const ArmParams& a) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = a.link_inertias[0] + a.link_inertias[1] + a.link_inertias[2];
  m(1, 1) = a.link_inertias[1] + a.link_inertias[2];
  m(2, 2) = a.link_inertias[2];
  m(1, 2) = m(2, 1) = -a.link_inertias[2];
  m.diagonal() += a.rotor_inertias;
  return m;
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

// dM/dq_k for k = 0..2.
std::array<Mat3, 3> mass_matrix_partials(const ArmParams& a, const Vec3& q) {
  std::array<Mat3, 3> dm{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  const double d = a.link_lengths[0];
  for (const auto& mp : mass_points(a)) {
    if (mp.mass == 0.0) continue;
    const PlanarPoint p = planar_point(q, mp.upper, mp.fore);
    const Mat3 j = local_jacobian(p, d);
    const Mat3 j2 = local_jacobian_dq2(p);
    const Mat3 j3 = local_jacobian_dq3(p);
    const Mat3 s2 = j2.transpose() * j;
    const Mat3 s3 = j3.transpose() * j;
    dm[1] += mp.mass * (s2 + s2.transpose());
    dm[2] += mp.mass * (s3 + s3.transpose());
  }
  return dm;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter("ArmParams: " + what);
}

}  // namespace

void ArmParams::validate() const {
  require(masses.minCoeff() > 0.0, "masses must be > 0");
  require(link_lengths.minCoeff() > 0.0, "link lengths must be > 0");
  require(com_offsets.minCoeff() >= 0.0, "COM offsets must be >= 0");
  require(link_inertias.minCoeff() >= 0.0, "inertias must be >= 0");
  require(rotor_inertias.minCoeff() >= 0.0, "rotor inertias must be >= 0");
  require(coulomb_smoothing > 0.0, "coulomb_smoothing must be > 0");
  require(payload_mass >= 0.0, "payload_mass must be >= 0");
  require(viscous_friction.minCoeff() >= 0.0, "viscous friction must be >= 0");
  require(coulomb_friction.minCoeff() >= 0.0, "coulomb friction must be >= 0");
  require(torque_map_B.minCoeff() > 0.0, "torque map entries must be > 0");
  require(std::isfinite(gravity_accel), "gravity must be finite");
}

Mat3 mass_matrix(const ArmParams& params, const Vec3& q) {
  Mat3 m = rotational_inertia(params);
  const double d = params.link_lengths[0];
  for (const auto& mp : mass_points(params)) {
    if (mp.mass == 0.0) continue;
    const Mat3 j = local_jacobian(planar_point(q, mp.upper, mp.fore), d);
    m.noalias() += mp.mass * (j.transpose() * j);
  }
  // Exact symmetry regardless of floating-point rounding in the products.
  return 0.5 * (m + m.transpose());
}

Mat3 coriolis_matrix(const ArmParams& params, const Vec3& q, const Vec3& dq) {
  const auto dm = mass_matrix_partials(params, q);
  Mat3 c = Mat3::Zero();
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        sum += 0.5 * (dm[i](k, j) + dm[j](k, i) - dm[k](i, j)) * dq[i];
      }
      c(k, j) = sum;
    }
  }
  return c;
}

Vec3 gravity_vector(const ArmParams& params, const Vec3& q) {
  Vec3 g = Vec3::Zero();
  if (params.gravity_accel == 0.0) return g;
  const double d = params.link_lengths[0];
  for (const auto& mp : mass_points(params)) {
    if (mp.mass == 0.0) continue;
    // dz/dq is the vertical row of the Jacobian.
    const Mat3 j = local_jacobian(planar_point(q, mp.upper, mp.fore), d);
    g += mp.mass * j.row(2).transpose();
  }
  return params.gravity_accel * g;
}

Vec3 friction_torque(const ArmParams& params, const Vec3& dq) {
  Vec3 f;
  for (int i = 0; i < 3; ++i) {
    f[i] = params.viscous_friction[i] * dq[i] +
           params.coulomb_friction[i] *
               std::tanh(dq[i] / params.coulomb_smoothing);
  }
  return f;
}

Vec3 forward_kinematics(const ArmParams& params, const Vec3& q) {
  const PlanarPoint p =
      planar_point(q, params.link_lengths[1], params.link_lengths[2]);
  return rot_z(q[0]) * Vec3(p.rho, params.link_lengths[0], p.z);
}

Mat3 jacobian(const ArmParams& params, const Vec3& q) {
  const PlanarPoint p =
      planar_point(q, params.link_lengths[1], params.link_lengths[2]);
  return rot_z(q[0]) * local_jacobian(p, params.link_lengths[0]);
}

Mat3 jacobian_rate(const ArmParams& params, const Vec3& q, const Vec3& dq) {
  const PlanarPoint p =
      planar_point(q, params.link_lengths[1], params.link_lengths[2]);
  const Mat3 jl = local_jacobian(p, params.link_lengths[0]);
  Mat3 skew_z = Mat3::Zero();
  skew_z(0, 1) = -1.0;
  skew_z(1, 0) = 1.0;
  const Mat3 local_rate = dq[0] * skew_z * jl +
                          dq[1] * local_jacobian_dq2(p) +
                          dq[2] * local_jacobian_dq3(p);
  return rot_z(q[0]) * local_rate;
}

RowVec3 jacobian_row_rate(const ArmParams& params, const Vec3& q,
                          const Vec3& dq, int axis) {
  if (axis < 0 || axis > 2) {
    throw InvalidParameter("jacobian_row_rate: axis must be 0, 1 or 2");
  }
  return jacobian_rate(params, q, dq).row(axis);
}

double kinetic_energy(const ArmParams& params, const JointState& s) {
  return 0.5 * s.dq.dot(mass_matrix(params, s.q) * s.dq);
}

double potential_energy(const ArmParams& params, const Vec3& q) {
  double v = 0.0;
  for (const auto& mp : mass_points(params)) {
    v += mp.mass * planar_point(q, mp.upper, mp.fore).z;
  }
  return params.gravity_accel * v;
}

}  // namespace armsafe

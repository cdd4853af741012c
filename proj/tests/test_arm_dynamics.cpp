#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "armsafe/arm_dynamics.hpp"
#include "armsafe/errors.hpp"
#include "armsafe/rk4.hpp"
#include "test_util.hpp"

using namespace armsafe;
using armsafe::test::Rng;

namespace {

ArmParams test_arm() {
  ArmParams a;
  a.payload_mass = 1.3;
  return a;
}

// World position of a point `upper` along the upper arm and `fore` along the
// forearm, written out directly from the kinematic convention.
Vec3 point(const ArmParams& a, const Vec3& q, double upper, double fore) {
  const double d = a.link_lengths[0];
  const double rho = upper * std::cos(q[1]) + fore * std::cos(q[1] - q[2]);
  const double z = upper * std::sin(q[1]) + fore * std::sin(q[1] - q[2]);
  return {rho * std::cos(q[0]) - d * std::sin(q[0]), rho * std::sin(q[0]) + d * std::cos(q[0]), z};
}

Vec3 point_velocity(const ArmParams& a, const Vec3& q, const Vec3& dq, double upper,
                    double fore) {
  const double d = a.link_lengths[0];
  const double e = q[1] - q[2], de = dq[1] - dq[2];
  const double rho = upper * std::cos(q[1]) + fore * std::cos(e);
  const double drho = -upper * std::sin(q[1]) * dq[1] - fore * std::sin(e) * de;
  const double dz = upper * std::cos(q[1]) * dq[1] + fore * std::cos(e) * de;
  const double c = std::cos(q[0]), s = std::sin(q[0]);
  return {drho * c - rho * s * dq[0] - d * c * dq[0], drho * s + rho * c * dq[0] - d * s * dq[0],
          dz};
}

// Sum of 1/2 m |v_com|^2 + 1/2 I |omega|^2 per body, plus the rotors.
double energy_oracle(const ArmParams& a, const Vec3& q, const Vec3& dq) {
  const auto lin = [&](double m, double upper, double fore) {
    return 0.5 * m * point_velocity(a, q, dq, upper, fore).squaredNorm();
  };
  double t = lin(a.masses[1], a.com_offsets[1], 0.0) +
             lin(a.masses[2], a.link_lengths[1], a.com_offsets[2]) +
             lin(a.payload_mass, a.link_lengths[1], a.link_lengths[2]);
  // Link 1 spins about z; links 2, 3 add an orthogonal pitch rate.
  t += 0.5 * a.link_inertias[0] * dq[0] * dq[0];
  t += 0.5 * a.link_inertias[1] * (dq[0] * dq[0] + dq[1] * dq[1]);
  t += 0.5 * a.link_inertias[2] * (dq[0] * dq[0] + (dq[1] - dq[2]) * (dq[1] - dq[2]));
  t += 0.5 * a.rotor_inertias.dot(dq.cwiseAbs2());
  return t;
}

double potential_oracle(const ArmParams& a, const Vec3& q) {
  const double g = a.gravity_accel;
  return g * (a.masses[1] * point(a, q, a.com_offsets[1], 0.0)[2] +
              a.masses[2] * point(a, q, a.link_lengths[1], a.com_offsets[2])[2] +
              a.payload_mass * point(a, q, a.link_lengths[1], a.link_lengths[2])[2]);
}

Mat3 mdot_fd(const ArmParams& a, const Vec3& q, const Vec3& dq, double h = 1e-6) {
  return (mass_matrix(a, q + h * dq) - mass_matrix(a, q - h * dq)) / (2 * h);
}

}  // namespace

TEST(MassMatrix, SymmetricAndPositiveDefinite) {
  const ArmParams a = test_arm();
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const Mat3 m = mass_matrix(a, rng.vec(-4, 4));
    EXPECT_EQ((m - m.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(MassMatrix, MatchesLinkVelocityEnergy) {
  const ArmParams a = test_arm();
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const Vec3 q = rng.vec(-4, 4), dq = rng.vec(-3, 3);
    const double quad = dq.dot(mass_matrix(a, q) * dq);
    EXPECT_NEAR(quad, 2.0 * energy_oracle(a, q, dq), 1e-8);
    EXPECT_NEAR(kinetic_energy(a, {q, dq}), energy_oracle(a, q, dq), 1e-8);
  }
}

TEST(MassMatrix, PayloadIncreasesInertia) {
  ArmParams a;
  const Vec3 q(0.3, 0.5, 1.4);
  ArmParams heavy = a;
  heavy.payload_mass = 2.0;
  Eigen::SelfAdjointEigenSolver<Mat3> es(mass_matrix(heavy, q) - mass_matrix(a, q));
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  EXPECT_GT(es.eigenvalues().maxCoeff(), 0.0);
}

TEST(Coriolis, ZeroAtRest) {
  const ArmParams a = test_arm();
  EXPECT_EQ((coriolis_matrix(a, Vec3(0.2, 0.3, 0.4), Vec3::Zero()) * Vec3::Zero()).norm(), 0.0);
  EXPECT_EQ(coriolis_matrix(a, Vec3(0.2, 0.3, 0.4), Vec3::Zero()).norm(), 0.0);
}

TEST(Coriolis, SkewSymmetryOfMdotMinus2C) {
  const ArmParams a = test_arm();
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 q = rng.vec(-4, 4), dq = rng.vec(-3, 3), v = rng.vec(-1, 1);
    const Mat3 n = mdot_fd(a, q, dq) - 2.0 * coriolis_matrix(a, q, dq);
    EXPECT_LT(std::abs(v.dot(n * v)), 1e-6);
  }
}

TEST(Coriolis, LagrangianIdentity) {
  // C dq = Mdot dq - grad_q (1/2 dq^T M dq), both sides by finite differences.
  const ArmParams a = test_arm();
  Rng rng(4);
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const Vec3 q = rng.vec(-4, 4), dq = rng.vec(-3, 3);
    Vec3 grad;
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i) * h;
      grad[i] = (0.5 * dq.dot(mass_matrix(a, q + e) * dq) - 0.5 * dq.dot(mass_matrix(a, q - e) * dq)) /
                (2 * h);
    }
    const Vec3 expect = mdot_fd(a, q, dq) * dq - grad;
    EXPECT_LT((coriolis_matrix(a, q, dq) * dq - expect).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Gravity, ZeroWithoutGravity) {
  ArmParams a = test_arm();
  a.gravity_accel = 0.0;
  EXPECT_EQ(gravity_vector(a, Vec3(0.4, -0.3, 1.2)).norm(), 0.0);
}

TEST(Gravity, WaistComponentVanishes) {
  const ArmParams a = test_arm();
  Rng rng(5);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(gravity_vector(a, rng.vec(-4, 4))[0], 0.0);
}

TEST(Gravity, GradientOfPotential) {
  const ArmParams a = test_arm();
  Rng rng(6);
  const double h = 1e-6;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 q = rng.vec(-4, 4);
    Vec3 grad;
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i) * h;
      grad[i] = (potential_oracle(a, q + e) - potential_oracle(a, q - e)) / (2 * h);
    }
    EXPECT_LT((gravity_vector(a, q) - grad).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(potential_energy(a, q), potential_oracle(a, q), 1e-9);
  }
}

TEST(Friction, Examples) {
  ArmParams a;
  EXPECT_EQ(friction_torque(a, Vec3::Zero()).norm(), 0.0);
  a.viscous_friction = Vec3::Ones();
  const Vec3 f = friction_torque(a, Vec3(2, -1, 0));
  EXPECT_DOUBLE_EQ(f[0], 2.0);
  EXPECT_DOUBLE_EQ(f[1], -1.0);
  EXPECT_DOUBLE_EQ(f[2], 0.0);
}

TEST(Friction, OpposesMotion) {
  ArmParams a;
  a.viscous_friction = Vec3(0.5, 1.0, 2.0);
  a.coulomb_friction = Vec3(1.0, 0.3, 2.0);
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const Vec3 dq = rng.vec(-2, 2);
    const Vec3 f = friction_torque(a, dq);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(std::signbit(f[i]), std::signbit(dq[i]));
  }
}

TEST(Kinematics, ZeroConfiguration) {
  const ArmParams a;
  const Vec3 p = forward_kinematics(a, Vec3::Zero());
  // Stretched along +x, shoulder offset along +y.
  EXPECT_NEAR(p[0], a.link_lengths[1] + a.link_lengths[2], 1e-15);
  EXPECT_NEAR(p[1], a.link_lengths[0], 1e-15);
  EXPECT_NEAR(p[2], 0.0, 1e-15);
}

TEST(Kinematics, MatchesWrittenOutConvention) {
  const ArmParams a;
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const Vec3 q = rng.vec(-4, 4);
    EXPECT_LT((forward_kinematics(a, q) - point(a, q, a.link_lengths[1], a.link_lengths[2]))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
  }
}

TEST(Kinematics, WaistHalfTurnNegatesXY) {
  const ArmParams a;
  const Vec3 q(0.3, 0.7, 1.1);
  const Vec3 p = forward_kinematics(a, q);
  const Vec3 r = forward_kinematics(a, q + Vec3(std::numbers::pi, 0, 0));
  EXPECT_NEAR(r[0], -p[0], 1e-14);
  EXPECT_NEAR(r[1], -p[1], 1e-14);
  EXPECT_NEAR(r[2], p[2], 1e-14);
}

TEST(Jacobian, FiniteDifferences) {
  const ArmParams a;
  Rng rng(9);
  const double h = 1e-6;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 q = rng.vec(-4, 4);
    Mat3 fd;
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i) * h;
      fd.col(i) = (forward_kinematics(a, q + e) - forward_kinematics(a, q - e)) / (2 * h);
    }
    const Mat3 j = jacobian(a, q);
    EXPECT_LT((j - fd).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(j(2, 0), 0.0);
    // First-order displacement.
    const Vec3 dq = rng.vec(-1, 1) * 1e-4;
    EXPECT_LT((forward_kinematics(a, q + dq) - forward_kinematics(a, q) - j * dq).norm(),
              10.0 * dq.squaredNorm());
  }
}

TEST(Jacobian, SingularWhenStretched) {
  const ArmParams a;
  // Elbow straight (q3 = 0): the shoulder and elbow columns are parallel.
  Eigen::JacobiSVD<Mat3> svd(jacobian(a, Vec3(0.4, 0.3, 0.0)));
  EXPECT_LT(svd.singularValues()[2], 1e-12);
}

TEST(Jacobian, RowRateFiniteDifferences) {
  const ArmParams a;
  Rng rng(10);
  const double h = 1e-6;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 q = rng.vec(-4, 4), dq = rng.vec(-3, 3);
    const Mat3 fd = (jacobian(a, q + h * dq) - jacobian(a, q - h * dq)) / (2 * h);
    for (int axis = 0; axis < 3; ++axis) {
      EXPECT_LT((jacobian_row_rate(a, q, dq, axis) - fd.row(axis)).cwiseAbs().maxCoeff(), 1e-5);
    }
    EXPECT_LT((jacobian_rate(a, q, dq) - fd).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_EQ(jacobian_row_rate(a, q, dq, 2)[0], 0.0);
  }
  EXPECT_EQ(jacobian_row_rate(a, Vec3(0.1, 0.2, 0.3), Vec3::Zero(), 1).norm(), 0.0);
}

TEST(Energy, ConservedWithoutForces) {
  // M qdd = -C dq, RK4 at 1e-4 s for 1 s.
  ArmParams a;
  a.gravity_accel = 0.0;
  using State = Eigen::Matrix<double, 6, 1>;
  const auto f = [&](double, const State& x) {
    const Vec3 q = x.head<3>(), dq = x.tail<3>();
    State d;
    d.head<3>() = dq;
    d.tail<3>() = mass_matrix(a, q).ldlt().solve(-coriolis_matrix(a, q, dq) * dq);
    return d;
  };
  State x;
  x << 0.1, 0.4, 1.2, 1.0, -0.8, 1.5;
  const double e0 = kinetic_energy(a, {x.head<3>(), x.tail<3>()});
  for (int k = 0; k < 10000; ++k) x = rk4_step(f, k * 1e-4, x, 1e-4);
  const double e1 = kinetic_energy(a, {x.head<3>(), x.tail<3>()});
  EXPECT_LT(std::abs(e1 - e0) / e0, 1e-6);
}

TEST(ArmParams, Validation) {
  ArmParams a;
  EXPECT_NO_THROW(a.validate());
  a.masses[1] = 0.0;
  EXPECT_THROW(a.validate(), InvalidParameter);
  a = ArmParams{};
  a.coulomb_smoothing = 0.0;
  EXPECT_THROW(a.validate(), InvalidParameter);
  a = ArmParams{};
  a.payload_mass = -1.0;
  EXPECT_THROW(a.validate(), InvalidParameter);
}

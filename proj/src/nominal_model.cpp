#include "armsafe/nominal_model.hpp"

#include "armsafe/errors.hpp"

namespace armsafe {

void NominalModel::validate() const {
  if (!m_bar.allFinite() || !c_bar.allFinite() || !g_bar.allFinite() ||
      !kd_bar.allFinite()) {
    throw InvalidModel("nominal model has non-finite entries");
  }
  if ((m_bar - m_bar.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + m_bar.cwiseAbs().maxCoeff())) {
    throw InvalidModel("m_bar must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.computeDirect(m_bar, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidModel("m_bar must be positive definite");
  }
  if (kd_bar.minCoeff() <= 0.0) {
    throw InvalidModel("kd_bar entries must be > 0");
  }
}

Vec3 NominalModel::drift(const Vec3& dq) const {
  return m_bar.llt().solve(-c_bar * dq - g_bar);
}

Mat3 NominalModel::input_gain() const {
  return m_bar.llt().solve(Mat3(kd_bar.asDiagonal()));
}

Mat3 NominalModel::inverse_gain() const {
  return kd_bar.cwiseInverse().asDiagonal() * m_bar;
}

}  // namespace armsafe

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace nlsobs {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

}  // namespace nlsobs

#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace colltraj {

using Complex = std::complex<double>;
using Index = Eigen::Index;

/// Amplitude vector over an enumerated basis.
using StateVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;

/// Reduced density matrix of the system factor.
using DensityMatrix = Eigen::MatrixXcd;

/// Row-major sparse operator on the full truncated space. Duplicate
/// coordinates are summed on construction from triplets.
using SparseOperator = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<Complex>;

inline constexpr Complex kI{0.0, 1.0};

}  // namespace colltraj

#pragma once

#include <Eigen/Dense>

namespace bslab::linalg {

// Number of threads used by BLAS/LAPACK and by matrix assembly.
void set_num_threads(int n);
int num_threads();

struct SymEig {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns
};

struct HermEig {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
};

// Dense symmetric/Hermitian eigendecompositions (divide and conquer).
// Throw numerical_failure on non-finite input or LAPACK failure.
SymEig sym_eig(const Eigen::MatrixXd& a);
Eigen::VectorXd sym_eigvalues(const Eigen::MatrixXd& a);
HermEig herm_eig(const Eigen::MatrixXcd& a);
Eigen::VectorXd herm_eigvalues(const Eigen::MatrixXcd& a);

// Singular values, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);
Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a);

// General (non-normal) eigenvalues; intended for small matrices.
Eigen::VectorXcd general_eigenvalues(const Eigen::MatrixXcd& a);

}  // namespace bslab::linalg

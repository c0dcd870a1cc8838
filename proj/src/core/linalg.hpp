#pragma once

#include <Eigen/Dense>

#include "discretize.hpp"

namespace predisso::linalg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct EigenDecomposition {
    VectorXcd values;   // ascending real part (pure real for selfadjoint input)
    MatrixXcd vectors;  // empty when not requested
    double residual = 0.0;  // max ||A v - lambda v|| over the checked columns
    int residual_checked = 0;

    VectorXd values_real() const { return values.real(); }
};

EigenDecomposition eig_selfadjoint(const OperatorMatrix& A);
EigenDecomposition eig_selfadjoint(const MatrixXcd& A);
EigenDecomposition eig_selfadjoint_real(const MatrixXd& A);
// dstevd on a real symmetric tridiagonal (diag, off)
EigenDecomposition eig_tridiagonal(const VectorXd& diag, const VectorXd& off,
                                   bool want_vectors = true);

EigenDecomposition eig_general(const OperatorMatrix& A, bool want_vectors = false);
EigenDecomposition eig_general(const MatrixXcd& A, bool want_vectors = false);

VectorXcd solve(const MatrixXcd& A, const VectorXcd& b);

// log of det(A) as sum of pivot logs; real part -inf signals a singular matrix.
Complex log_det(MatrixXcd A);

struct ContourRule {
    Complex center;
    double radius = 0.0;
    VectorXcd nodes;
    VectorXcd weights;  // for  oint f dz  ~=  sum_j weights_j f(nodes_j)
};
ContourRule contour_quadrature(Complex center, double radius, int n);

// --- banded LU (LAPACK zgbtrf / zgbtrs) -------------------------------------

class BandedMatrix {
public:
    BandedMatrix(int n, int kl, int ku);
    void add(int i, int j, Complex v);
    void set(int i, int j, Complex v);
    Complex get(int i, int j) const;
    int n() const { return n_; }
    int kl() const { return kl_; }
    int ku() const { return ku_; }

private:
    friend class BandedLU;
    int n_, kl_, ku_;
    MatrixXcd ab_;  // LAPACK band storage with kl extra rows for fill-in
};

class BandedLU {
public:
    explicit BandedLU(BandedMatrix m);  // factorizes; throws SingularMatrix
    VectorXcd solve(const VectorXcd& b, char trans = 'N') const;
    MatrixXcd solve(const MatrixXcd& b, char trans = 'N') const;
    int n() const { return n_; }

private:
    int n_, kl_, ku_;
    MatrixXcd ab_;
    std::vector<int> ipiv_;
};

// (H - z) in interleaved channel ordering: bandwidth 3 on either side.
BandedMatrix banded_from_blocks(const TwoChannelBlocks& blocks, Complex z);
// scalar tridiagonal (P - z)
BandedMatrix banded_from_tridiag(const Tridiag& t, Complex z);

// Solves restricted to the orthogonal complement of span(basis columns):
//   v = Pi_hat (Pi_hat (K) Pi_hat)^{-1} Pi_hat b
// with Pi_hat the dx-weighted orthogonal projector off the basis. Implemented
// as a bordered system; a couple of iterative-refinement sweeps keep it
// accurate even when K itself is nearly singular (z close to an eigenvalue).
class DeflatedSolver {
public:
    DeflatedSolver(const TwoChannelBlocks& blocks, Complex z, const MatrixXd& basis, double dx);
    DeflatedSolver(const Tridiag& block, Complex z, const MatrixXd& basis, double dx);

    VectorXcd solve(const VectorXcd& b) const;
    VectorXcd solve_adjoint(const VectorXcd& b) const;
    double projector_residual() const { return last_projector_residual_; }

private:
    void init(BandedMatrix m);
    VectorXcd run(const VectorXcd& b, char trans) const;

    std::unique_ptr<BandedLU> lu_;
    const TwoChannelBlocks* blocks_ = nullptr;  // for residual recomputation
    const Tridiag* tri_ = nullptr;
    Complex z_;
    MatrixXd basis_;  // n x m, dx-orthonormal, real
    double dx_ = 1.0;
    MatrixXcd y_;           // K^{-1} basis
    MatrixXcd yh_;          // K^{-H} basis
    Eigen::PartialPivLU<MatrixXcd> m_lu_, mh_lu_;
    mutable double last_projector_residual_ = 0.0;
};

// Tracks one eigenvalue of the (banded) operator near a given shift by shifted
// inverse iteration with the complex-symmetric Rayleigh quotient.
struct TrackedEigen {
    Complex value;
    VectorXcd vector;
    double residual;
};
TrackedEigen track_eigenvalue(const TwoChannelBlocks& blocks, Complex shift,
                              const VectorXcd& start = VectorXcd(), int max_iter = 12);

}  // namespace predisso::linalg

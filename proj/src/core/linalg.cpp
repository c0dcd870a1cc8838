#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace predisso::linalg {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_info(int info, const char* what) {
    if (info < 0) throw Error("LapackError", std::string(what) + ": illegal argument");
    if (info > 0) throw ConvergenceFailure(std::string(what) + " failed to converge");
}

// max ||A v - lambda v|| over a sample of columns (all when n is small)
template <typename MatLike>
double sample_residual(const MatLike& A, const VectorXcd& vals, const MatrixXcd& vecs,
                       int* checked) {
    int n = int(vals.size());
    int step = n <= 256 ? 1 : std::max(1, n / 64);
    double worst = 0.0;
    int cnt = 0;
    for (int j = 0; j < n; j += step) {
        VectorXcd v = vecs.col(j);
        double r = (A * v - vals[j] * v).norm() / std::max(v.norm(), 1e-300);
        worst = std::max(worst, r);
        ++cnt;
    }
    if (checked) *checked = cnt;
    return worst;
}

void sort_by_real(EigenDecomposition& d) {
    int n = int(d.values.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (d.values[a].real() != d.values[b].real())
            return d.values[a].real() < d.values[b].real();
        return d.values[a].imag() < d.values[b].imag();
    });
    VectorXcd vals(n);
    MatrixXcd vecs;
    if (d.vectors.size()) vecs.resize(d.vectors.rows(), n);
    for (int k = 0; k < n; ++k) {
        vals[k] = d.values[idx[k]];
        if (d.vectors.size()) vecs.col(k) = d.vectors.col(idx[k]);
    }
    d.values = std::move(vals);
    if (d.vectors.size()) d.vectors = std::move(vecs);
}

}  // namespace

EigenDecomposition eig_selfadjoint_real(const MatrixXd& A) {
    int n = int(A.rows());
    MatrixXd work = A;
    VectorXd vals(n);
    int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, work.data(), n, vals.data());
    check_info(info, "dsyevd");
    EigenDecomposition d;
    d.values = vals.cast<Complex>();
    d.vectors = work.cast<Complex>();
    d.residual = sample_residual(A.cast<Complex>().eval(), d.values, d.vectors,
                                 &d.residual_checked);
    return d;
}

EigenDecomposition eig_selfadjoint(const MatrixXcd& A) {
    int n = int(A.rows());
    if (A.imag().cwiseAbs().maxCoeff() == 0.0) return eig_selfadjoint_real(A.real());
    MatrixXcd work = A;
    VectorXd vals(n);
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, work.data(), n, vals.data());
    check_info(info, "zheevd");
    EigenDecomposition d;
    d.values = vals.cast<Complex>();
    d.vectors = std::move(work);
    d.residual = sample_residual(A, d.values, d.vectors, &d.residual_checked);
    return d;
}

EigenDecomposition eig_selfadjoint(const OperatorMatrix& A) {
    if (!A.hermitian)
        throw Error("PreconditionViolated", "eig_selfadjoint needs the hermitian flag");
    return eig_selfadjoint(A.entries);
}

EigenDecomposition eig_tridiagonal(const VectorXd& diag, const VectorXd& off,
                                   bool want_vectors) {
    int n = int(diag.size());
    VectorXd d = diag, e = off;
    EigenDecomposition out;
    if (want_vectors) {
        MatrixXd z(n, n);
        int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, d.data(), e.data(), z.data(), n);
        check_info(info, "dstevd");
        out.vectors = z.cast<Complex>();
    } else {
        int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'N', n, d.data(), e.data(), nullptr, n);
        check_info(info, "dstevd");
    }
    out.values = d.cast<Complex>();
    return out;
}

EigenDecomposition eig_general(const MatrixXcd& A, bool want_vectors) {
    int n = int(A.rows());
    MatrixXcd work = A;
    VectorXcd vals(n);
    MatrixXcd vecs;
    int info;
    if (want_vectors) {
        vecs.resize(n, n);
        info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, work.data(), n, vals.data(),
                             nullptr, 1, vecs.data(), n);
    } else {
        info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, vals.data(),
                             nullptr, 1, nullptr, 1);
    }
    check_info(info, "zgeev");
    EigenDecomposition d;
    d.values = std::move(vals);
    d.vectors = std::move(vecs);
    sort_by_real(d);
    if (want_vectors)
        d.residual = sample_residual(A, d.values, d.vectors, &d.residual_checked);
    return d;
}

EigenDecomposition eig_general(const OperatorMatrix& A, bool want_vectors) {
    return eig_general(A.entries, want_vectors);
}

VectorXcd solve(const MatrixXcd& A, const VectorXcd& b) {
    int n = int(A.rows());
    if (b.size() != n) throw Error("ShapeMismatch", "solve: b does not conform to A");
    MatrixXcd lu = A;
    VectorXcd x = b;
    std::vector<int> ipiv(n);
    int info = LAPACKE_zgesv(LAPACK_COL_MAJOR, n, 1, lu.data(), n, ipiv.data(), x.data(), n);
    if (info > 0) throw SingularMatrix("zero pivot in zgesv");
    check_info(info, "zgesv");
    double scale = A.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i)
        if (std::abs(lu(i, i)) < 1e-14 * scale)
            throw SingularMatrix("pivot below 1e-14 * scale");
    double rel = (A * x - b).norm() / std::max(b.norm(), 1e-300);
    if (rel > 1e-10)
        throw SingularMatrix("solve residual " + std::to_string(rel) + " exceeds 1e-10");
    return x;
}

Complex log_det(MatrixXcd A) {
    int n = int(A.rows());
    std::vector<int> ipiv(n);
    int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, A.data(), n, ipiv.data());
    if (info < 0) throw Error("LapackError", "zgetrf: illegal argument");
    if (info > 0) return Complex(-std::numeric_limits<double>::infinity(), 0.0);
    Complex ld = 0.0;
    int swaps = 0;
    for (int i = 0; i < n; ++i) {
        ld += std::log(A(i, i));
        if (ipiv[i] != i + 1) ++swaps;
    }
    if (swaps % 2) ld += Complex(0.0, kPi);
    return ld;
}

ContourRule contour_quadrature(Complex center, double radius, int n) {
    if (n < 8 || n % 2 != 0)
        throw Error("PreconditionViolated", "contour quadrature needs n >= 8 even");
    if (!(radius > 0.0)) throw Error("PreconditionViolated", "contour radius must be positive");
    ContourRule rule;
    rule.center = center;
    rule.radius = radius;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int j = 0; j < n; ++j) {
        double phi = 2.0 * kPi * double(j) / double(n);
        Complex e(std::cos(phi), std::sin(phi));
        rule.nodes[j] = center + radius * e;
        rule.weights[j] = Complex(0.0, 2.0 * kPi / double(n)) * radius * e;
    }
    return rule;
}

// --- banded ------------------------------------------------------------------

BandedMatrix::BandedMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku) {
    ab_ = MatrixXcd::Zero(2 * kl + ku + 1, n);
}

void BandedMatrix::add(int i, int j, Complex v) {
    ab_(kl_ + ku_ + i - j, j) += v;
}

void BandedMatrix::set(int i, int j, Complex v) {
    ab_(kl_ + ku_ + i - j, j) = v;
}

Complex BandedMatrix::get(int i, int j) const {
    if (j - i > ku_ || i - j > kl_) return 0.0;
    return ab_(kl_ + ku_ + i - j, j);
}

BandedLU::BandedLU(BandedMatrix m)
    : n_(m.n_), kl_(m.kl_), ku_(m.ku_), ab_(std::move(m.ab_)), ipiv_(n_) {
    int ldab = 2 * kl_ + ku_ + 1;
    int info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, ab_.data(), ldab,
                              ipiv_.data());
    if (info > 0) throw SingularMatrix("zero pivot in banded LU");
    check_info(info, "zgbtrf");
}

VectorXcd BandedLU::solve(const VectorXcd& b, char trans) const {
    VectorXcd x = b;
    int ldab = 2 * kl_ + ku_ + 1;
    int info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, trans, n_, kl_, ku_, 1,
                              const_cast<Complex*>(ab_.data()), ldab,
                              const_cast<int*>(ipiv_.data()), x.data(), n_);
    check_info(info, "zgbtrs");
    return x;
}

MatrixXcd BandedLU::solve(const MatrixXcd& b, char trans) const {
    MatrixXcd x = b;
    int ldab = 2 * kl_ + ku_ + 1;
    int info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, trans, n_, kl_, ku_, int(b.cols()),
                              const_cast<Complex*>(ab_.data()), ldab,
                              const_cast<int*>(ipiv_.data()), x.data(), n_);
    check_info(info, "zgbtrs");
    return x;
}

BandedMatrix banded_from_blocks(const TwoChannelBlocks& blocks, Complex z) {
    int n = blocks.n();
    BandedMatrix m(2 * n, 3, 3);
    auto c1 = [](int i) { return 2 * i; };
    auto c2 = [](int i) { return 2 * i + 1; };
    for (int i = 0; i < n; ++i) {
        Complex capterm = blocks.eta != 0.0 && blocks.cap.size() == n
                              ? Complex(0.0, -blocks.eta * blocks.cap[i])
                              : Complex(0.0, 0.0);
        m.set(c1(i), c1(i), blocks.p1.diag[i] + capterm - z);
        m.set(c2(i), c2(i), blocks.p2.diag[i] + capterm - z);
        m.set(c1(i), c2(i), blocks.h * blocks.w.diag[i]);
        m.set(c2(i), c1(i), blocks.h * blocks.wstar.diag[i]);
        if (i + 1 < n) {
            m.set(c1(i), c1(i + 1), blocks.p1.upper[i]);
            m.set(c1(i + 1), c1(i), blocks.p1.lower[i]);
            m.set(c2(i), c2(i + 1), blocks.p2.upper[i]);
            m.set(c2(i + 1), c2(i), blocks.p2.lower[i]);
            m.set(c1(i), c2(i + 1), blocks.h * blocks.w.upper[i]);
            m.set(c1(i + 1), c2(i), blocks.h * blocks.w.lower[i]);
            m.set(c2(i), c1(i + 1), blocks.h * blocks.wstar.upper[i]);
            m.set(c2(i + 1), c1(i), blocks.h * blocks.wstar.lower[i]);
        }
    }
    return m;
}

BandedMatrix banded_from_tridiag(const Tridiag& t, Complex z) {
    int n = t.n();
    BandedMatrix m(n, 1, 1);
    for (int i = 0; i < n; ++i) m.set(i, i, t.diag[i] - z);
    for (int i = 0; i + 1 < n; ++i) {
        m.set(i, i + 1, t.upper[i]);
        m.set(i + 1, i, t.lower[i]);
    }
    return m;
}

namespace {

// interleave / deinterleave between block ordering [ch1; ch2] and the banded
// ordering (ch1_i, ch2_i) pairs
VectorXcd interleave(const VectorXcd& v) {
    int n = int(v.size()) / 2;
    VectorXcd r(2 * n);
    for (int i = 0; i < n; ++i) {
        r[2 * i] = v[i];
        r[2 * i + 1] = v[n + i];
    }
    return r;
}

VectorXcd deinterleave(const VectorXcd& v) {
    int n = int(v.size()) / 2;
    VectorXcd r(2 * n);
    for (int i = 0; i < n; ++i) {
        r[i] = v[2 * i];
        r[n + i] = v[2 * i + 1];
    }
    return r;
}

}  // namespace

DeflatedSolver::DeflatedSolver(const TwoChannelBlocks& blocks, Complex z,
                               const MatrixXd& basis, double dx)
    : blocks_(&blocks), z_(z), basis_(basis), dx_(dx) {
    init(banded_from_blocks(blocks, z));
}

DeflatedSolver::DeflatedSolver(const Tridiag& block, Complex z, const MatrixXd& basis,
                               double dx)
    : tri_(&block), z_(z), basis_(basis), dx_(dx) {
    init(banded_from_tridiag(block, z));
}

void DeflatedSolver::init(BandedMatrix m) {
    lu_ = std::make_unique<BandedLU>(std::move(m));
    int nm = int(basis_.cols());
    MatrixXcd phi = basis_.cast<Complex>();
    if (blocks_) {
        MatrixXcd phi_i(phi.rows(), nm);
        for (int j = 0; j < nm; ++j) phi_i.col(j) = interleave(phi.col(j));
        phi = std::move(phi_i);
    }
    y_ = lu_->solve(phi, 'N');
    yh_ = lu_->solve(phi, 'C');
    MatrixXcd m_small = dx_ * (phi.adjoint() * y_);
    MatrixXcd mh_small = dx_ * (phi.adjoint() * yh_);
    m_lu_ = Eigen::PartialPivLU<MatrixXcd>(m_small);
    mh_lu_ = Eigen::PartialPivLU<MatrixXcd>(mh_small);
}

VectorXcd DeflatedSolver::run(const VectorXcd& b_in, char trans) const {
    const bool adj = trans == 'C';
    const MatrixXcd& y = adj ? yh_ : y_;
    const auto& mlu = adj ? mh_lu_ : m_lu_;
    VectorXcd b = blocks_ ? interleave(b_in) : b_in;
    int n2 = int(b.size());
    int nm = int(basis_.cols());

    MatrixXcd phi(n2, nm);
    {
        MatrixXcd p = basis_.cast<Complex>();
        for (int j = 0; j < nm; ++j) phi.col(j) = blocks_ ? interleave(p.col(j)) : p.col(j);
    }

    auto apply_k = [&](const VectorXcd& v) -> VectorXcd {
        VectorXcd vb = blocks_ ? deinterleave(v) : v;
        VectorXcd r;
        if (blocks_) {
            r = blocks_->apply_shifted(vb, z_);
            if (adj) {
                // K^H v computed from the complex-symmetric structure:
                // K^H = conj(K^T); our two-channel K is symmetric except for
                // w/wstar which are transposes of each other, so K^T = K.
                r = blocks_->apply_shifted(vb.conjugate(), z_).conjugate();
            }
            return interleave(r);
        }
        if (adj) return tri_->apply(vb.conjugate()).conjugate() - std::conj(z_) * vb;
        return tri_->apply(vb) - z_ * vb;
    };

    // one bordered pass: [K phi; dx phi^H 0] [v; c] = [rv; rc]
    auto pass = [&](const VectorXcd& rv, const VectorXcd& rc, VectorXcd& v, VectorXcd& c) {
        VectorXcd x0 = lu_->solve(rv, trans);
        VectorXcd rhs = dx_ * (phi.adjoint() * x0) - rc;
        c = mlu.solve(rhs);
        v = x0 - y * c;
    };

    VectorXcd v, c;
    pass(b, VectorXcd::Zero(nm), v, c);
    for (int it = 0; it < 2; ++it) {
        VectorXcd rv = b - apply_k(v) - phi * c;
        VectorXcd rc = -dx_ * (phi.adjoint() * v);
        if (rv.norm() + rc.norm() < 1e-14 * std::max(1.0, b.norm())) break;
        VectorXcd dv, dc;
        pass(rv, rc, dv, dc);
        v += dv;
        c += dc;
    }
    last_projector_residual_ = (phi.adjoint() * v).norm() * dx_ / std::max(v.norm(), 1e-300);
    if (last_projector_residual_ > 1e-8)
        throw DeflationFailure("projector residual " +
                               std::to_string(last_projector_residual_) + " > 1e-8");
    return blocks_ ? deinterleave(v) : v;
}

VectorXcd DeflatedSolver::solve(const VectorXcd& b) const { return run(b, 'N'); }

VectorXcd DeflatedSolver::solve_adjoint(const VectorXcd& b) const { return run(b, 'C'); }

TrackedEigen track_eigenvalue(const TwoChannelBlocks& blocks, Complex shift,
                              const VectorXcd& start, int max_iter) {
    int n2 = 2 * blocks.n();
    VectorXcd v;
    if (start.size() == n2) {
        v = start;
    } else {
        std::mt19937 rng(12345);
        std::normal_distribution<double> g;
        v.resize(n2);
        for (int i = 0; i < n2; ++i) v[i] = Complex(g(rng), g(rng));
    }
    v.normalize();
    Complex mu = shift;
    double resid = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        BandedLU lu(banded_from_blocks(blocks, mu));
        VectorXcd w = lu.solve(interleave(v));
        v = deinterleave(w).normalized();
        // bilinear Rayleigh quotient (stationary for complex-symmetric H)
        VectorXcd hv = blocks.apply(v);
        Complex num = v.cwiseProduct(hv).sum();
        Complex den = v.cwiseProduct(v).sum();
        Complex mu_new = std::abs(den) > 1e-12 ? num / den : v.dot(hv);  // fallback
        resid = (hv - mu_new * v).norm();
        bool done = std::abs(mu_new - mu) < 1e-14 * std::max(1.0, std::abs(mu_new)) ||
                    resid < 1e-12;
        mu = mu_new;
        if (done) break;
    }
    return {mu, v, resid};
}

}  // namespace predisso::linalg

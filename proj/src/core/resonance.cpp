#include "resonance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace predisso {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

Eigen::VectorXd WellBasis::lambdas() const {
    VectorXd l(m());
    for (int j = 0; j < m(); ++j) l[j] = states[j].lambda;
    return l;
}

Eigen::MatrixXd WellBasis::u_matrix() const {
    if (states.empty()) return {};
    MatrixXd u(states[0].u.size(), m());
    for (int j = 0; j < m(); ++j) u.col(j) = states[j].u;
    return u;
}

Eigen::MatrixXd WellBasis::phi_matrix() const {
    MatrixXd u = u_matrix();
    MatrixXd phi = MatrixXd::Zero(2 * u.rows(), u.cols());
    phi.topRows(u.rows()) = u;
    return phi;
}

namespace {

struct WindowResolve {
    double lo, hi, a;
    int m;
};

// Window and margin from the P1 spectrum. In tracked mode the window hugs the
// lowest k levels: I = [lambda_1 - h/5, lambda_k + h/5]. The margin comes from
// the distance to the nearest level outside I, divided by 3 so that (gap2)
// holds with the nearest outsider exactly on the closed boundary.
WindowResolve resolve_window(const ModelConfig& cfg, const VectorXd& evals) {
    WindowResolve w{};
    if (cfg.cutoff.track_levels > 0) {
        int k = cfg.cutoff.track_levels;
        if (int(evals.size()) < k + 1)
            throw EmptyWindow("P1 spectrum has fewer than track_levels+1 states");
        w.lo = evals[0] - cfg.h / 5.0;
        w.hi = evals[k - 1] + cfg.h / 5.0;
    } else {
        w.lo = cfg.cutoff.lo();
        w.hi = cfg.cutoff.hi();
    }
    int m = 0;
    double nearest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < evals.size(); ++i) {
        double l = evals[i];
        if (l >= w.lo && l <= w.hi) {
            ++m;
        } else {
            double d = l < w.lo ? w.lo - l : l - w.hi;
            nearest = std::min(nearest, d);
        }
    }
    if (m == 0) throw EmptyWindow("no P1 eigenvalue inside the energy window");
    w.m = m;
    if (cfg.cutoff.auto_margin) {
        if (!std::isfinite(nearest))
            throw GapViolation("cannot derive a margin: no eigenvalue outside the window");
        w.a = nearest / 3.0;
    } else {
        w.a = cfg.cutoff.margin;
        for (int i = 0; i < evals.size(); ++i) {
            double l = evals[i];
            if (l >= w.lo && l <= w.hi) continue;
            double d = l < w.lo ? w.lo - l : l - w.hi;
            if (d < 3.0 * w.a * (1.0 - 1e-9)) {
                std::ostringstream oss;
                oss << "eigenvalue " << l << " violates (gap2) for a = " << w.a;
                throw GapViolation(oss.str());
            }
        }
    }
    return w;
}

}  // namespace

Problem prepare_problem(const ModelConfig& cfg_in) {
    ModelConfig cfg = cfg_in;
    cfg.validate_basic();

    // the window feeds the resolution bound, so resolve it and re-derive the
    // grid until stable (two passes settle it)
    Grid grid = build_grid(cfg);
    WindowResolve w{};
    for (int pass = 0; pass < 3; ++pass) {
        auto [d, e] = schrodinger_tridiag(grid, cfg.v1, cfg.h);
        auto eig = linalg::eig_tridiagonal(d, e, /*want_vectors=*/false);
        w = resolve_window(cfg, eig.values_real());
        ModelConfig trial = cfg;
        trial.cutoff.window_center = 0.5 * (w.lo + w.hi);
        trial.cutoff.window_half_width = 0.5 * (w.hi - w.lo);
        trial.cutoff.margin = w.a;
        trial.cutoff.track_levels = 0;
        trial.cutoff.auto_margin = false;
        Grid trial_grid = build_grid(trial);
        bool stable = trial_grid.n_points == grid.n_points;
        cfg = trial;
        grid = trial_grid;
        if (stable) break;
    }

    auto [d, e] = schrodinger_tridiag(grid, cfg.v1, cfg.h);
    auto eig = linalg::eig_tridiagonal(d, e, /*want_vectors=*/true);
    VectorXd evals = eig.values_real();

    Problem p;
    p.cfg = cfg;
    p.grid = grid;
    p.basis.window_lo = w.lo;
    p.basis.window_hi = w.hi;
    p.basis.a = w.a;
    p.basis.dx = grid.dx();
    double sdx = std::sqrt(grid.dx());
    for (int i = 0; i < evals.size(); ++i) {
        if (evals[i] < w.lo || evals[i] > w.hi) continue;
        WellState s;
        s.lambda = evals[i];
        s.u = eig.vectors.col(i).real() / sdx;
        int imax;
        s.u.cwiseAbs().maxCoeff(&imax);
        if (s.u[imax] < 0.0) s.u = -s.u;
        s.index = int(p.basis.states.size()) + 1;
        p.basis.states.push_back(std::move(s));
    }
    std::sort(p.basis.states.begin(), p.basis.states.end(),
              [](const WellState& x, const WellState& y) { return x.lambda < y.lambda; });
    p.basis.a_tilde = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < p.basis.m(); ++i)
        p.basis.a_tilde = std::min(p.basis.a_tilde,
                                   p.basis.states[i + 1].lambda - p.basis.states[i].lambda);
    p.energy_scale = std::max(1.0, std::abs(p.basis.window_hi) + 2.0 * p.basis.a);
    return p;
}

WellBasis well_states(const ModelConfig& cfg) { return prepare_problem(cfg).basis; }

// --- direct resonances --------------------------------------------------------

std::vector<Resonance> resonances_direct(const Problem& p, double theta, bool fill_drift) {
    if (!(theta > 0.0 && theta <= 0.3))
        throw ConfigError("resonances_direct needs theta in (0, 0.3]");
    const WellBasis& basis = p.basis;
    int m = basis.m();
    double eps1 = p.eps1();
    double re_lo = basis.window_lo - basis.a;
    double re_hi = basis.window_hi + basis.a;

    TwoChannelBlocks blocks = distorted_blocks(p.cfg, p.grid, theta);
    auto eig = linalg::eig_general(blocks.dense(), /*want_vectors=*/false);

    std::vector<Complex> found;
    for (int i = 0; i < eig.values.size(); ++i) {
        Complex z = eig.values[i];
        if (z.real() < re_lo || z.real() > re_hi) continue;
        if (z.imag() < -eps1 || z.imag() > 1e-8 * p.energy_scale) continue;
        found.push_back(z);
    }
    if (int(found.size()) != m) {
        std::ostringstream oss;
        oss << "expected " << m << " eigenvalues in Omega(h), found " << found.size();
        for (Complex z : found) oss << "  (" << z.real() << "," << z.imag() << ")";
        throw CountMismatch(oss.str());
    }

    std::vector<Resonance> out;
    std::vector<int> used(m, 0);
    std::sort(found.begin(), found.end(),
              [](Complex a, Complex b) { return a.real() < b.real(); });
    for (Complex z : found) {
        // refine the eigenvalue with a couple of shifted inverse iterations
        auto tracked = linalg::track_eigenvalue(blocks, z);
        Complex rho = tracked.value;
        int best = -1;
        double bestd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
            double dcur = std::abs(rho - basis.states[j].lambda);
            if (dcur < bestd - 1e-15) {
                bestd = dcur;
                best = j;
            }
        }
        if (used[best]++)
            throw CountMismatch("resonance pairing to the well levels is not injective");
        if (rho.imag() > 1e-10)
            throw StabilityFailure("resonance with positive imaginary part " +
                                   std::to_string(rho.imag()));
        Resonance r;
        r.rho = rho;
        r.paired_lambda = basis.states[best].lambda;
        r.paired_index = basis.states[best].index;
        r.method = "direct";
        if (fill_drift) {
            TwoChannelBlocks blocks15 = distorted_blocks(p.cfg, p.grid, 1.5 * theta);
            auto t15 = linalg::track_eigenvalue(blocks15, rho, tracked.vector);
            r.theta_drift = std::abs(t15.value - rho);
            if (r.theta_drift > 1e-5 * p.energy_scale)
                throw StabilityFailure("theta drift " + std::to_string(r.theta_drift) +
                                       " exceeds 1e-5 * energy scale");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Resonance> resonances_direct(const ModelConfig& cfg, double theta) {
    return resonances_direct(prepare_problem(cfg), theta);
}

// --- effective system ----------------------------------------------------------

EffectiveSystem::EffectiveSystem(const Problem& p, double theta)
    : p_(&p), theta_(theta), blocks_(distorted_blocks(p.cfg, p.grid, theta)) {
    phi_ = p.basis.phi_matrix();
    u_ = p.basis.u_matrix();
    dx_ = p.grid.dx();
    int n = int(u_.rows()), m = int(u_.cols());
    wsu_.resize(n, m);
    for (int k = 0; k < m; ++k)
        wsu_.col(k) = blocks_.wstar.apply(u_.col(k).cast<Complex>());
}

MatrixXcd EffectiveSystem::f(Complex z) const {
    int n = int(u_.rows()), m = int(u_.cols());
    linalg::DeflatedSolver defl(blocks_, z, phi_, dx_);
    MatrixXcd F(m, m);
    for (int k = 0; k < m; ++k) {
        VectorXcd rhs = VectorXcd::Zero(2 * n);
        rhs.tail(n) = wsu_.col(k);
        VectorXcd v = defl.solve(rhs);
        VectorXcd wv = blocks_.w.apply(v.tail(n));
        for (int j = 0; j < m; ++j)
            F(j, k) = dx_ * (u_.col(j).cast<Complex>().cwiseProduct(wv)).sum();
    }
    return F;
}

MatrixXcd EffectiveSystem::m0(Complex z) const {
    int m = int(u_.cols());
    linalg::BandedLU lu(linalg::banded_from_tridiag(blocks_.p2, z));
    MatrixXcd M(m, m);
    double h = p_->cfg.h;
    for (int k = 0; k < m; ++k) {
        VectorXcd w2 = lu.solve(wsu_.col(k));
        VectorXcd ww = blocks_.w.apply(w2);
        for (int j = 0; j < m; ++j)
            M(j, k) = h * h * dx_ * (u_.col(j).cast<Complex>().cwiseProduct(ww)).sum();
    }
    return M;
}

MatrixXcd EffectiveSystem::e_minus_plus(Complex z) const {
    int m = int(u_.cols());
    MatrixXcd E = f(z) * (p_->cfg.h * p_->cfg.h);
    for (int j = 0; j < m; ++j) E(j, j) += z - p_->basis.states[j].lambda;
    return E;
}

Complex EffectiveSystem::log_det_e(Complex z) const { return linalg::log_det(e_minus_plus(z)); }

Complex EffectiveSystem::survival_symbol(Complex z, const VectorXcd& alpha) const {
    MatrixXcd E = e_minus_plus(z);
    VectorXcd x = E.partialPivLu().solve(alpha);
    return alpha.dot(x);  // <E^{-1} alpha, alpha>
}

MatrixXcd m0_matrix(const ModelConfig& cfg, Complex z, double theta, const WellBasis& basis) {
    Problem p = prepare_problem(cfg);
    p.basis = basis;
    return EffectiveSystem(p, theta).m0(z);
}

MatrixXcd m0_matrix_filled(const ModelConfig& cfg, Complex z, const WellBasis& basis,
                           double delta, double floor_value) {
    Problem p = prepare_problem(cfg);
    TwoChannelBlocks blocks = filled_well_blocks(p.cfg, p.grid, delta, floor_value);
    MatrixXd u = basis.u_matrix();
    int m = int(u.cols());
    double dx = p.grid.dx(), h = cfg.h;
    linalg::BandedLU lu(linalg::banded_from_tridiag(blocks.p2, z));
    MatrixXcd M(m, m);
    for (int k = 0; k < m; ++k) {
        VectorXcd y = blocks.wstar.apply(u.col(k).cast<Complex>());
        VectorXcd w2 = lu.solve(y);
        VectorXcd ww = blocks.w.apply(w2);
        for (int j = 0; j < m; ++j)
            M(j, k) = h * h * dx * (u.col(j).cast<Complex>().cwiseProduct(ww)).sum();
    }
    return M;
}

MatrixXcd f_matrix(const ModelConfig& cfg, Complex z, double theta, const WellBasis& basis) {
    Problem p = prepare_problem(cfg);
    p.basis = basis;
    return EffectiveSystem(p, theta).f(z);
}

// --- Feshbach roots --------------------------------------------------------------

Complex feshbach_root(const EffectiveSystem& es, Complex seed) {
    const Problem& p = es.problem();
    double a = p.a();
    double delta = std::max(1e-3 * a, 1e-8);
    Complex z = seed;
    for (int it = 0; it < 50; ++it) {
        Complex ld0 = es.log_det_e(z);
        if (ld0.real() == -std::numeric_limits<double>::infinity()) return z;
        Complex ldp = es.log_det_e(z + delta);
        Complex ldm = es.log_det_e(z - delta);
        // determinants rescaled by the current magnitude to dodge over/underflow
        double ref = ld0.real();
        Complex d0 = std::exp(ld0 - ref);
        Complex dd = (std::exp(ldp - ref) - std::exp(ldm - ref)) / (2.0 * delta);
        if (dd == Complex(0.0, 0.0)) throw NewtonDivergence("flat determinant");
        Complex step = -d0 / dd;
        z += step;
        if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(z))) return z;
    }
    throw NewtonDivergence("no convergence in 50 Newton iterations");
}

std::vector<Resonance> resonances_feshbach(const Problem& p, double theta) {
    EffectiveSystem es(p, theta);
    const WellBasis& basis = p.basis;
    int m = basis.m();
    std::vector<Resonance> out;
    for (int j = 0; j < m; ++j) {
        Complex root = feshbach_root(es, basis.states[j].lambda);
        if (root.imag() > 1e-10)
            throw StabilityFailure("Feshbach root with positive imaginary part");
        Resonance r;
        r.rho = root;
        r.paired_lambda = basis.states[j].lambda;
        r.paired_index = basis.states[j].index;
        r.method = "feshbach";
        out.push_back(r);
    }
    if (std::isfinite(basis.a_tilde) && basis.a_tilde > 0.0) {
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                if (std::abs(out[i].rho - out[j].rho) < 1e-9 * p.energy_scale)
                    throw RootCollision("two Newton seeds converged to the same root");
    }
    return out;
}

std::vector<Resonance> resonances_feshbach(const ModelConfig& cfg, double theta,
                                           const WellBasis& basis) {
    Problem p = prepare_problem(cfg);
    p.basis = basis;
    return resonances_feshbach(p, theta);
}

Complex first_order_resonance(const Problem& p, int j) {
    if (j < 1 || j > p.basis.m()) throw ConfigError("well state index out of range");
    EffectiveSystem es(p, p.cfg.distortion.theta);
    double lambda = p.basis.states[j - 1].lambda;
    MatrixXcd F = es.f(lambda);
    return lambda - p.cfg.h * p.cfg.h * F(j - 1, j - 1);
}

Complex first_order_resonance(const ModelConfig& cfg, const WellBasis& basis, int j) {
    Problem p = prepare_problem(cfg);
    p.basis = basis;
    return first_order_resonance(p, j);
}

double reduced_resolvent_norm(const Problem& p, Complex z, double theta) {
    TwoChannelBlocks blocks = distorted_blocks(p.cfg, p.grid, theta);
    linalg::DeflatedSolver defl(blocks.p1, z, p.basis.u_matrix(), p.grid.dx());
    int n = p.grid.interior();
    std::mt19937 rng(777);
    std::normal_distribution<double> g;
    VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < 20; ++it) {
        VectorXcd w = defl.solve(v);
        VectorXcd v2 = defl.solve_adjoint(w);
        sigma = std::sqrt(v2.norm());
        v = v2.normalized();
    }
    return sigma;
}

double reduced_resolvent_norm(const ModelConfig& cfg, Complex z, double theta) {
    return reduced_resolvent_norm(prepare_problem(cfg), z, theta);
}

}  // namespace predisso

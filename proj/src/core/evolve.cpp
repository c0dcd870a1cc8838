#include "evolve.hpp"

#include <algorithm>
#include <cmath>

namespace predisso {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// --- cutoff -------------------------------------------------------------------

double CutoffFn::operator()(double e) const {
    double d = e < lo ? lo - e : (e > hi ? e - hi : 0.0);
    if (d <= a) return 1.0;
    if (d >= 2.0 * a) return 0.0;
    return smoothstep(nu, 2.0 - d / a);
}

double CutoffFn::deriv(int k, double e) const {
    if (k == 0) return (*this)(e);
    double d = e < lo ? lo - e : (e > hi ? e - hi : 0.0);
    if (d <= a || d >= 2.0 * a) return 0.0;
    double u = 2.0 - d / a;
    double sgn = e < lo ? 1.0 : -1.0;  // du/de
    if (k == 1) return smoothstep_d1(nu, u) * sgn / a;
    if (k == 2) return smoothstep_d2(nu, u) / (a * a);
    // higher derivatives sampled by differencing the analytic second one
    double step = a * 1e-4;
    return (deriv(k - 1, e + step) - deriv(k - 1, e - step)) / (2.0 * step);
}

std::pair<CutoffFn, CutoffReport> build_cutoff(const CutoffSpec& spec) {
    if (!(spec.margin > 0.0)) throw ConfigError("cutoff margin must be positive");
    CutoffFn g{spec.lo(), spec.hi(), spec.margin, spec.nu};
    CutoffReport rep;
    rep.sup_scaled.assign(spec.nu + 1, 0.0);
    rep.sup_scaled[0] = 1.0;
    // sample each transition band finely
    for (int k = 1; k <= spec.nu; ++k) {
        double sup = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            double d = g.a * (1.0 + double(i) / 4000.0);
            sup = std::max(sup, std::abs(g.deriv(k, g.hi + d)));
        }
        rep.sup_scaled[k] = sup * std::pow(g.a, k);
    }
    return {g, rep};
}

CutoffFn cutoff_for(const Problem& p, int nu) {
    return CutoffFn{p.basis.window_lo, p.basis.window_hi, p.basis.a, nu};
}

// --- states ---------------------------------------------------------------------

Eigen::VectorXcd StateVector::full() const {
    VectorXcd v(2 * n());
    v.head(n()) = ch1;
    v.tail(n()) = ch2;
    return v;
}

double StateVector::norm() const {
    return std::sqrt(dx * (ch1.squaredNorm() + ch2.squaredNorm()));
}

StateVector StateVector::from_span(const WellBasis& basis, const VectorXcd& coeffs) {
    if (coeffs.size() != basis.m()) throw ConfigError("coefficient count must equal m");
    StateVector s;
    int n = int(basis.states[0].u.size());
    s.ch1 = VectorXcd::Zero(n);
    s.ch2 = VectorXcd::Zero(n);
    s.dx = basis.dx;
    for (int j = 0; j < basis.m(); ++j)
        s.ch1 += coeffs[j] * basis.states[j].u.cast<Complex>();
    return s;
}

Eigen::VectorXcd alpha_projection(const StateVector& phi, const WellBasis& basis) {
    VectorXcd alpha(basis.m());
    for (int j = 0; j < basis.m(); ++j)
        alpha[j] = basis.dx * basis.states[j].u.cast<Complex>().cwiseProduct(phi.ch1).sum();
    return alpha;
}

// --- spectral backend -------------------------------------------------------------

BoxSpectrum box_spectrum(const Problem& p) {
    TwoChannelBlocks blocks = full_blocks(p.cfg, p.grid);
    MatrixXd H = blocks.dense().real();
    auto eig = linalg::eig_selfadjoint_real(H);
    BoxSpectrum s;
    s.energies = eig.values_real();
    s.vectors = eig.vectors.real();
    s.dx = p.grid.dx();
    return s;
}

double recurrence_horizon(const Problem& p) {
    double support_top = p.basis.window_hi + 2.0 * p.basis.a;
    double e_max = support_top + 1.0;
    double gamma = p.cfg.sea_depth();
    double v_max = 2.0 * std::sqrt(std::max(e_max + gamma, 1e-12));
    return 2.0 * (2.0 * p.cfg.grid_request.half_length) / v_max / 2.0;
    // = 2L / v_max with L the half-length; domain length is 2L
}

SurvivalSeries survival_box(const Problem& p, const StateVector& phi, const CutoffFn& g,
                            const std::vector<double>& times, const BoxSpectrum& spec) {
    double sdx = std::sqrt(spec.dx);
    VectorXcd c = sdx * (spec.vectors.transpose() * phi.full());
    int nn = int(spec.energies.size());
    VectorXd w(nn);
    for (int i = 0; i < nn; ++i) w[i] = g(spec.energies[i]) * std::norm(c[i]);

    SurvivalSeries out;
    out.backend = "box_spectral";
    out.cutoff_applied = true;
    out.times = times;
    out.t_rec = recurrence_horizon(p);
    out.amplitudes.resize(times.size());
    out.trusted.resize(times.size());
    for (size_t k = 0; k < times.size(); ++k) {
        Complex amp = 0.0;
        for (int i = 0; i < nn; ++i) {
            if (w[i] == 0.0) continue;
            amp += std::polar(w[i], -times[k] * spec.energies[i]);
        }
        out.amplitudes[k] = amp;
        out.trusted[k] = times[k] <= out.t_rec;
    }
    return out;
}

SurvivalSeries survival_box(const ModelConfig& cfg, const StateVector& phi, const CutoffFn& g,
                            const std::vector<double>& times) {
    Problem p = prepare_problem(cfg);
    return survival_box(p, phi, g, times, box_spectrum(p));
}

// --- CAP / Crank-Nicolson backend ---------------------------------------------------

namespace {

double spectral_radius_estimate(const TwoChannelBlocks& b) {
    double r = 0.0;
    int n = b.n();
    for (int i = 0; i < n; ++i) {
        double row1 = std::abs(b.p1.diag[i]) + std::abs(b.h * b.w.diag[i]);
        double row2 = std::abs(b.p2.diag[i]) + std::abs(b.h * b.wstar.diag[i]);
        if (i > 0) {
            row1 += std::abs(b.p1.lower[i - 1]) + std::abs(b.h * b.w.lower[i - 1]);
            row2 += std::abs(b.p2.lower[i - 1]) + std::abs(b.h * b.wstar.lower[i - 1]);
        }
        if (i + 1 < n) {
            row1 += std::abs(b.p1.upper[i]) + std::abs(b.h * b.w.upper[i]);
            row2 += std::abs(b.p2.upper[i]) + std::abs(b.h * b.wstar.upper[i]);
        }
        if (b.eta != 0.0 && b.cap.size() == n) {
            row1 += b.eta * b.cap[i];
            row2 += b.eta * b.cap[i];
        }
        r = std::max(r, std::max(row1, row2));
    }
    return r;
}

}  // namespace

double cap_auto_dt(const Problem& p, double eta) {
    return 0.4 / spectral_radius_estimate(cap_blocks(p.cfg, p.grid, eta));
}

std::vector<double> snap_times(const std::vector<double>& times, double dt) {
    std::vector<double> out(times.size());
    for (size_t i = 0; i < times.size(); ++i) out[i] = std::round(times[i] / dt) * dt;
    return out;
}

SurvivalSeries survival_cap(const Problem& p, const StateVector& phi, const CutoffFn& g,
                            const std::vector<double>& times, const CapOptions& opts,
                            const BoxSpectrum& spec) {
    TwoChannelBlocks blocks = cap_blocks(p.cfg, p.grid, opts.eta);
    double radius = spectral_radius_estimate(blocks);
    double dt = opts.dt > 0.0 ? opts.dt : 0.4 / radius;
    if (dt * radius > 0.5)
        throw ConfigError("CN step too large: dt * spectral radius must be <= 0.5");

    // initial state g(H) phi through the Hermitian eigenbasis
    double sdx = std::sqrt(spec.dx);
    VectorXcd c = sdx * (spec.vectors.transpose() * phi.full());
    for (int i = 0; i < c.size(); ++i) c[i] *= g(spec.energies[i]);
    VectorXcd psi = (spec.vectors * c) / sdx;

    std::vector<double> snapped = snap_times(times, dt);
    double t_end = snapped.empty() ? 0.0 : *std::max_element(snapped.begin(), snapped.end());
    long n_steps = lround(t_end / dt);

    // Cayley step with a single banded factorization of (1 + i dt/2 Hc)
    Complex idt2(0.0, 0.5 * dt);
    int n = blocks.n();
    linalg::BandedMatrix A(2 * n, 3, 3);
    {
        linalg::BandedMatrix base = linalg::banded_from_blocks(blocks, Complex(0.0, 0.0));
        for (int i = 0; i < 2 * n; ++i) {
            for (int j = std::max(0, i - 3); j <= std::min(2 * n - 1, i + 3); ++j) {
                Complex v = base.get(i, j) * idt2;
                if (i == j) v += 1.0;
                A.set(i, j, v);
            }
        }
    }
    linalg::BandedLU lu(std::move(A));

    auto step = [&](VectorXcd& v) {
        VectorXcd hv = blocks.apply(v);
        VectorXcd rhs
            = v - idt2 * hv;
        // interleaved banded solve
        VectorXcd ri(2 * n);
        for (int i = 0; i < n; ++i) {
            ri[2 * i] = rhs[i];
            ri[2 * i + 1] = rhs[n + i];
        }
        VectorXcd xi = lu.solve(ri);
        for (int i = 0; i < n; ++i) {
            v[i] = xi[2 * i];
            v[n + i] = xi[2 * i + 1];
        }
    };

    SurvivalSeries out;
    out.backend = "cap_cn";
    out.cutoff_applied = true;
    out.times = snapped;
    out.t_rec = 0.0;  // absorbing boundaries: no box recurrence
    out.amplitudes.assign(snapped.size(), Complex(0.0, 0.0));
    out.trusted.assign(snapped.size(), true);

    VectorXcd phi_full = phi.full();
    double norm0 = psi.norm();
    auto record = [&](long step_idx) {
        double t = double(step_idx) * dt;
        for (size_t k = 0; k < snapped.size(); ++k)
            if (std::abs(snapped[k] - t) < 0.5 * dt)
                out.amplitudes[k] = spec.dx * phi_full.dot(psi);
    };
    record(0);
    double prev_norm = norm0;
    for (long s = 1; s <= n_steps; ++s) {
        step(psi);
        double norm = psi.norm();
        if (opts.eta > 0.0) {
            if (norm > prev_norm * (1.0 + 1e-8))
                throw StepInstability("CN norm grew by more than 1e-8 in one step");
        } else {
            if (std::abs(norm - prev_norm) > 1e-12 * std::max(1.0, prev_norm))
                throw StepInstability("Cayley step lost unitarity beyond 1e-12");
        }
        prev_norm = norm;
        record(s);
    }
    out.norm_drift = std::abs(prev_norm - norm0);
    return out;
}

// --- residues -----------------------------------------------------------------------

ResidueSet residues(const EffectiveSystem& es, const std::vector<Resonance>& rhos,
                    const VectorXcd& alpha) {
    const Problem& p = es.problem();
    int m = int(rhos.size());
    double a = p.a();
    double at = p.basis.a_tilde;
    double r = 0.5 * std::min(std::isfinite(at) ? at : kInf, a);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (std::abs(rhos[i].rho - rhos[j].rho) < 2.0 * r)
                throw DiscOverlap("residue discs overlap");

    auto integrate = [&](Complex center, int nodes) {
        auto rule = linalg::contour_quadrature(center, r, nodes);
        Complex sum = 0.0;
        for (int k = 0; k < nodes; ++k)
            sum += rule.weights[k] * es.survival_symbol(rule.nodes[k], alpha);
        return sum / Complex(0.0, 2.0 * M_PI);
    };

    ResidueSet out;
    out.quadrature_nodes_used = 128;
    double phi_norm2 = alpha.squaredNorm();
    for (int j = 0; j < m; ++j) {
        Complex b64 = integrate(rhos[j].rho, 64);
        Complex b128 = integrate(rhos[j].rho, 128);
        out.richardson_error = std::max(out.richardson_error, std::abs(b128 - b64));
        out.b.push_back(b128);
    }
    if (out.richardson_error > 1e-8 * std::max(phi_norm2, 1e-300))
        throw QuadratureNotConverged("Richardson gap " +
                                     std::to_string(out.richardson_error) + " > 1e-8 |phi|^2");
    return out;
}

ResidueSet residues(const ModelConfig& cfg, const std::vector<Resonance>& rhos,
                    const WellBasis& basis, const VectorXcd& alpha, double theta) {
    Problem p = prepare_problem(cfg);
    p.basis = basis;
    EffectiveSystem es(p, theta);
    return residues(es, rhos, alpha);
}

SurvivalSeries expansion(const std::vector<Resonance>& rhos, const ResidueSet& res,
                         const std::vector<double>& times) {
    if (rhos.size() != res.b.size())
        throw GridMismatch("resonance and residue lists are not aligned");
    SurvivalSeries out;
    out.backend = "model";
    out.cutoff_applied = false;
    out.times = times;
    out.amplitudes.resize(times.size());
    out.trusted.assign(times.size(), true);
    for (size_t k = 0; k < times.size(); ++k) {
        Complex amp = 0.0;
        for (size_t j = 0; j < rhos.size(); ++j)
            amp += std::exp(Complex(0.0, -times[k]) * rhos[j].rho) * res.b[j];
        out.amplitudes[k] = amp;
    }
    return out;
}

RemainderSeries remainder(const SurvivalSeries& series, const SurvivalSeries& model) {
    if (series.times.size() != model.times.size())
        throw GridMismatch("time grids differ in length");
    for (size_t i = 0; i < series.times.size(); ++i)
        if (std::abs(series.times[i] - model.times[i]) > 1e-9)
            throw GridMismatch("time grids differ");
    RemainderSeries out;
    out.abs_r.resize(series.times.size());
    for (size_t i = 0; i < series.times.size(); ++i) {
        out.abs_r[i] = std::abs(series.amplitudes[i] - model.amplitudes[i]);
        bool trust = series.trusted.empty() || series.trusted[i];
        if (trust) out.sup_trusted = std::max(out.sup_trusted, out.abs_r[i]);
    }
    return out;
}

// --- r0 -----------------------------------------------------------------------------

namespace {

struct R0Box {
    VectorXd energies;
    MatrixXd overlaps;  // m x n: O_{j,n} = <W* u_j, psi_n>
    double spacing = 0.0;
};

R0Box r0_box(const ModelConfig& cfg, const Grid& grid, const WellBasis& window_basis) {
    // P2 spectrum on this box plus overlaps with W* u_j; the well functions are
    // recomputed on the box so wider extrapolation boxes stay consistent.
    auto [d2, e2] = schrodinger_tridiag(grid, cfg.v2, cfg.h);
    auto eig2 = linalg::eig_tridiagonal(d2, e2, true);

    auto [d1, e1] = schrodinger_tridiag(grid, cfg.v1, cfg.h);
    auto eig1 = linalg::eig_tridiagonal(d1, e1, true);
    double sdx = std::sqrt(grid.dx());

    TwoChannelBlocks blocks = full_blocks(cfg, grid);
    int m = window_basis.m();
    int n = grid.interior();
    MatrixXd wsu(n, m);
    for (int j = 0; j < m; ++j) {
        // nearest level of P1 on this box to the window level
        int best = 0;
        double bd = kInf;
        for (int i = 0; i < eig1.values.size(); ++i) {
            double dist = std::abs(eig1.values[i].real() - window_basis.states[j].lambda);
            if (dist < bd) {
                bd = dist;
                best = i;
            }
        }
        VectorXd u = eig1.vectors.col(best).real() / sdx;
        int imax;
        u.cwiseAbs().maxCoeff(&imax);
        if (u[imax] < 0.0) u = -u;
        wsu.col(j) = blocks.wstar.apply(u.cast<Complex>()).real();
    }

    R0Box out;
    out.energies = eig2.values_real();
    out.overlaps = grid.dx() / sdx * (wsu.transpose() * eig2.vectors.real());
    // mean level spacing near the window
    double lo = window_basis.window_lo - 2.0 * window_basis.a;
    double hi = window_basis.window_hi + 2.0 * window_basis.a;
    std::vector<double> in_window;
    for (int i = 0; i < out.energies.size(); ++i)
        if (out.energies[i] >= lo && out.energies[i] <= hi)
            in_window.push_back(out.energies[i]);
    if (in_window.size() >= 2)
        out.spacing = (in_window.back() - in_window.front()) / double(in_window.size() - 1);
    return out;
}

std::vector<Complex> r0_eval(const R0Box& box, const WellBasis& basis, const VectorXcd& alpha,
                             const CutoffFn& g, const std::vector<double>& times, double h,
                             double eps, double eps_prime) {
    int m = basis.m();
    int nn = int(box.energies.size());
    VectorXcd a_weight(nn), b_weight(nn);
    VectorXd gv(nn);
    for (int i = 0; i < nn; ++i) {
        double en = box.energies[i];
        gv[i] = g(en);
        Complex A = 0.0, B = 0.0;
        for (int j = 0; j < m; ++j) {
            double lambda = basis.states[j].lambda;
            A += alpha[j] * box.overlaps(j, i) / Complex(en - lambda, -eps);
            B += alpha[j] * box.overlaps(j, i) / Complex(en - lambda, -eps_prime);
        }
        a_weight[i] = A;
        b_weight[i] = B;
    }
    std::vector<Complex> out(times.size());
    for (size_t k = 0; k < times.size(); ++k) {
        Complex s = 0.0;
        for (int i = 0; i < nn; ++i) {
            if (gv[i] == 0.0) continue;
            s += std::polar(1.0, -times[k] * box.energies[i]) * gv[i] * a_weight[i] *
                 std::conj(b_weight[i]);
        }
        out[k] = -h * h * s;
    }
    return out;
}

}  // namespace

R0Series r0_series(const Problem& p, const VectorXcd& alpha, const CutoffFn& g,
                   const std::vector<double>& times, std::pair<double, double> eps_pair,
                   bool with_wide_box) {
    R0Box box = r0_box(p.cfg, p.grid, p.basis);
    if (box.spacing <= 0.0)
        throw EpsilonTooSmall("cannot estimate the P2 level spacing near the window");
    double eps = eps_pair.first > 0.0 ? eps_pair.first : 3.0 * box.spacing;
    double eps_prime = eps_pair.second > 0.0 ? eps_pair.second : eps;
    if (eps < box.spacing || eps_prime < box.spacing)
        throw EpsilonTooSmall("epsilon below the P2 level spacing; resonant denominators");

    R0Series out;
    out.times = times;
    out.eps = eps;
    out.eps_prime = eps_prime;
    out.level_spacing = box.spacing;
    out.values = r0_eval(box, p.basis, alpha, g, times, p.cfg.h, eps, eps_prime);

    if (with_wide_box) {
        // same dx, 1.5x the half-length (n-1 even, so 1.5(n-1) is integral)
        Grid wide = p.grid;
        double L = p.cfg.grid_request.half_length;
        wide.x_min = -1.5 * L;
        wide.x_max = 1.5 * L;
        wide.n_points = int(std::lround(1.5 * double(p.grid.n_points - 1))) + 1;
        R0Box wbox = r0_box(p.cfg, wide, p.basis);
        double weps = eps_pair.first > 0.0 ? eps_pair.first : 3.0 * wbox.spacing;
        out.eps_wide = weps;
        out.values_wide = r0_eval(wbox, p.basis, alpha, g, times, p.cfg.h, weps, weps);
    }
    return out;
}

NoCutoffResult survival_nocutoff(const Problem& p, const StateVector& phi,
                                 const std::vector<double>& times, const BoxSpectrum& spec,
                                 const std::vector<Resonance>& rhos, const ResidueSet& res,
                                 const CutoffFn& g_configured) {
    CutoffFn unit{-kInf, kInf, 1.0, 0};  // g == 1 everywhere
    NoCutoffResult out;
    out.series = survival_box(p, phi, unit, times, spec);
    out.series.cutoff_applied = false;
    out.model = expansion(rhos, res, times);
    RemainderSeries r = remainder(out.series, out.model);
    out.sup_difference = r.sup_trusted;

    double sdx = std::sqrt(spec.dx);
    VectorXcd c = sdx * (spec.vectors.transpose() * phi.full());
    double acc = 0.0;
    for (int i = 0; i < c.size(); ++i)
        acc += (1.0 - g_configured(spec.energies[i])) * std::norm(c[i]);
    out.one_minus_g_expectation = acc;
    return out;
}

std::vector<double> default_times(const Problem& p, int n_points) {
    // linear to 1/a, then log-spaced out to the recurrence horizon
    double a = p.a();
    double t_knee = 1.0 / a;
    double t_max = std::max(recurrence_horizon(p), 2.0 * t_knee);
    int n1 = n_points / 2, n2 = n_points - n1;
    std::vector<double> ts;
    for (int i = 0; i < n1; ++i) ts.push_back(t_knee * double(i) / double(n1));
    for (int i = 0; i < n2; ++i)
        ts.push_back(t_knee * std::pow(t_max / t_knee, double(i) / double(n2 - 1)));
    return ts;
}

}  // namespace predisso

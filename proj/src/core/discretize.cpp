#include "discretize.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

namespace predisso {

std::vector<double> Grid::interior_nodes() const {
    std::vector<double> xs(interior());
    for (int i = 0; i < interior(); ++i) xs[i] = interior_node(i);
    return xs;
}

double max_grid_spacing(const ModelConfig& cfg) {
    double support_top = cfg.cutoff.hi() + 2.0 * cfg.cutoff.margin;
    double e_max = support_top + 1.0;
    double L = cfg.grid_request.half_length;
    double vmin = 0.0;
    for (int i = 0; i <= 256; ++i) {
        double x = -L + 2.0 * L * double(i) / 256.0;
        vmin = std::min(vmin, std::min(eval_potential_real(cfg.v1, x),
                                       eval_potential_real(cfg.v2, x)));
    }
    double p_max = std::sqrt(std::max(e_max - vmin, 1.0));
    return cfg.h / (10.0 * p_max);
}

Grid build_grid(const ModelConfig& cfg) {
    cfg.validate_basic();
    double L = cfg.grid_request.half_length;
    double dx_max = max_grid_spacing(cfg);
    int n_min = int(std::ceil(2.0 * L / dx_max)) + 1;
    int n = cfg.grid_request.n_points;
    if (n == 0) {
        n = n_min;
        if (n % 2 == 0) ++n;  // keep x = 0 on the grid
        if (n > 4096)
            throw ResolutionError("auto grid needs n_points = " + std::to_string(n) +
                                  " > 4096; enlarge h or shrink the domain");
    } else {
        if (n < 16) throw ResolutionError("n_points must be >= 16");
        double dx = 2.0 * L / double(n - 1);
        if (dx > dx_max)
            throw ResolutionError("grid too coarse: dx = " + std::to_string(dx) +
                                  " > " + std::to_string(dx_max) +
                                  "; minimal n_points = " + std::to_string(n_min));
    }
    return Grid{-L, L, n};
}

double OperatorMatrix::hermiticity_defect() const {
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

void OperatorMatrix::dump_csv(const std::string& path) const {
    std::ofstream out(path);
    for (Eigen::Index i = 0; i < entries.rows(); ++i) {
        for (Eigen::Index j = 0; j < entries.cols(); ++j) {
            if (j) out << ',';
            out << entries(i, j).real() << ',' << entries(i, j).imag();
        }
        out << '\n';
    }
}

Eigen::VectorXcd Tridiag::apply(const Eigen::VectorXcd& v) const {
    int m = n();
    Eigen::VectorXcd r = diag.cwiseProduct(v);
    for (int i = 0; i + 1 < m; ++i) {
        r[i] += upper[i] * v[i + 1];
        r[i + 1] += lower[i] * v[i];
    }
    return r;
}

Eigen::MatrixXcd Tridiag::dense() const {
    int m = n();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(m, m);
    for (int i = 0; i < m; ++i) A(i, i) = diag[i];
    for (int i = 0; i + 1 < m; ++i) {
        A(i, i + 1) = upper[i];
        A(i + 1, i) = lower[i];
    }
    return A;
}

Eigen::MatrixXcd TwoChannelBlocks::dense() const {
    int m = n();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
    A.topLeftCorner(m, m) = p1.dense();
    A.bottomRightCorner(m, m) = p2.dense();
    A.topRightCorner(m, m) = h * w.dense();
    A.bottomLeftCorner(m, m) = h * wstar.dense();
    if (eta != 0.0 && cap.size() == m) {
        for (int i = 0; i < m; ++i) {
            A(i, i) -= Complex(0.0, eta * cap[i]);
            A(m + i, m + i) -= Complex(0.0, eta * cap[i]);
        }
    }
    return A;
}

Eigen::VectorXcd TwoChannelBlocks::apply(const Eigen::VectorXcd& v) const {
    int m = n();
    Eigen::VectorXcd r(2 * m);
    r.head(m) = p1.apply(v.head(m)) + h * w.apply(v.tail(m));
    r.tail(m) = p2.apply(v.tail(m)) + h * wstar.apply(v.head(m));
    if (eta != 0.0 && cap.size() == m) {
        for (int i = 0; i < m; ++i) {
            r[i] -= Complex(0.0, eta * cap[i]) * v[i];
            r[m + i] -= Complex(0.0, eta * cap[i]) * v[m + i];
        }
    }
    return r;
}

Eigen::VectorXcd TwoChannelBlocks::apply_shifted(const Eigen::VectorXcd& v, Complex z) const {
    return apply(v) - z * v;
}

namespace {

// Distorted scalar block -h^2 J^{-1/2} D J^{-1} D J^{-1/2} + V(x + i theta f(x)),
// with D the staggered first difference (flux form), so theta = 0 reduces to the
// plain 3-point Laplacian bit for bit.
Tridiag scalar_block(const Grid& grid, const PotentialSpec& v, double h, double theta,
                     const DistortionSpec& dist) {
    int n = grid.interior();
    double dx = grid.dx();
    Tridiag t;
    t.diag.resize(n);
    t.lower.resize(n - 1);
    t.upper.resize(n - 1);

    Eigen::VectorXcd jinv_mid(n + 1);  // midpoints x_i - dx/2 for i = 0..n
    for (int i = 0; i <= n; ++i) {
        double xm = grid.interior_node(i - 1) + 0.5 * dx;  // = x_min + (i + 1/2) dx
        jinv_mid[i] = 1.0 / Complex(1.0, theta * dist.fprime(xm));
    }
    Eigen::VectorXcd jsq(n);  // J(x_i)^{-1/2}
    for (int i = 0; i < n; ++i)
        jsq[i] = 1.0 / std::sqrt(Complex(1.0, theta * dist.fprime(grid.interior_node(i))));

    double k = h * h / (dx * dx);
    for (int i = 0; i < n; ++i) {
        double x = grid.interior_node(i);
        Complex z = Complex(x, theta * dist.f(x));
        t.diag[i] = k * (jinv_mid[i] + jinv_mid[i + 1]) * jsq[i] * jsq[i] +
                    eval_potential(v, z);
    }
    for (int i = 0; i + 1 < n; ++i) {
        Complex off = -k * jinv_mid[i + 1] * jsq[i] * jsq[i + 1];
        t.upper[i] = off;
        t.lower[i] = off;
    }
    return t;
}

// Coupling block a(z) + b(z) h J^{-1} D, D the centered first difference.
Tridiag coupling_block(const Grid& grid, const CouplingSpec& c, double h, double theta,
                       const DistortionSpec& dist) {
    int n = grid.interior();
    double dx = grid.dx();
    Tridiag t;
    t.diag.resize(n);
    t.lower.setZero(n - 1);
    t.upper.setZero(n - 1);
    for (int i = 0; i < n; ++i) {
        double x = grid.interior_node(i);
        Complex z = Complex(x, theta * dist.f(x));
        Complex jinv = 1.0 / Complex(1.0, theta * dist.fprime(x));
        t.diag[i] = eval_potential(c.a_coef, z);
        Complex d = eval_potential(c.b_coef, z) * h * jinv / (2.0 * dx);
        if (i + 1 < n) t.upper[i] = d;
        if (i > 0) t.lower[i - 1] = -d;
    }
    return t;
}

Eigen::VectorXd real_part_checked(const Eigen::VectorXcd& v) {
    return v.real();
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> schrodinger_tridiag(const Grid& grid,
                                                                const PotentialSpec& v,
                                                                double h) {
    DistortionSpec none;
    Tridiag t = scalar_block(grid, v, h, 0.0, none);
    Eigen::VectorXd d = real_part_checked(t.diag);
    Eigen::VectorXd off = real_part_checked(t.upper);
    return {d, off};
}

OperatorMatrix assemble_schrodinger(const Grid& grid, const PotentialSpec& v, double h) {
    DistortionSpec none;
    Tridiag t = scalar_block(grid, v, h, 0.0, none);
    OperatorMatrix om;
    om.entries = t.dense();
    om.layout = BlockLayout::Scalar;
    om.hermitian = true;
    om.grid = grid;
    om.provenance = {h, 0.0, 0.0, to_string(v.kind), ""};
    om.channel_dim = grid.interior();
    return om;
}

std::pair<OperatorMatrix, OperatorMatrix> assemble_coupling(const Grid& grid,
                                                            const CouplingSpec& c, double h) {
    DistortionSpec none;
    Tridiag t = coupling_block(grid, c, h, 0.0, none);
    OperatorMatrix w, ws;
    w.entries = t.dense();
    ws.entries = t.transpose().dense();  // real coefficients: adjoint = transpose
    for (auto* om : {&w, &ws}) {
        om->layout = BlockLayout::Scalar;
        om->hermitian = false;
        om->grid = grid;
        om->provenance = {h, 0.0, 0.0, "", ""};
        om->channel_dim = grid.interior();
    }
    return {std::move(w), std::move(ws)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> distortion_profile(const Grid& grid,
                                                               const DistortionSpec& d) {
    d.validate();
    if (d.ramp_start + d.ramp_width >= grid.x_max)
        throw RampOutOfDomain("ramp_start + ramp_width must be < x_max");
    Eigen::VectorXd f(grid.n_points), fp(grid.n_points);
    for (int i = 0; i < grid.n_points; ++i) {
        f[i] = d.f(grid.node(i));
        fp[i] = d.fprime(grid.node(i));
    }
    return {f, fp};
}

TwoChannelBlocks distorted_blocks(const ModelConfig& cfg, const Grid& grid, double theta) {
    if (std::abs(theta) > 0.3) throw ConfigError("|theta| must be <= 0.3");
    if (cfg.distortion.ramp_start + cfg.distortion.ramp_width >= grid.x_max)
        throw RampOutOfDomain("ramp_start + ramp_width must be < x_max");
    TwoChannelBlocks b;
    b.p1 = scalar_block(grid, cfg.v1, cfg.h, theta, cfg.distortion);
    b.p2 = scalar_block(grid, cfg.v2, cfg.h, theta, cfg.distortion);
    b.w = coupling_block(grid, cfg.coupling, cfg.h, theta, cfg.distortion);
    b.wstar = b.w.transpose();
    b.grid = grid;
    b.h = cfg.h;
    b.theta = theta;
    return b;
}

TwoChannelBlocks full_blocks(const ModelConfig& cfg, const Grid& grid) {
    return distorted_blocks(cfg, grid, 0.0);
}

OperatorMatrix assemble_full(const ModelConfig& cfg, const Grid& grid) {
    TwoChannelBlocks b = full_blocks(cfg, grid);
    OperatorMatrix om;
    om.entries = b.dense();
    om.layout = BlockLayout::TwoChannel;
    om.grid = grid;
    om.provenance = {cfg.h, 0.0, 0.0, to_string(cfg.v1.kind), to_string(cfg.v2.kind)};
    om.channel_dim = grid.interior();
    om.hermitian = om.hermiticity_defect() < 1e-13 * om.entries.cwiseAbs().maxCoeff();
    return om;
}

OperatorMatrix assemble_full(const ModelConfig& cfg) {
    return assemble_full(cfg, build_grid(cfg));
}

DistortedParts assemble_distorted(const ModelConfig& cfg, double theta) {
    Grid grid = build_grid(cfg);
    TwoChannelBlocks b = distorted_blocks(cfg, grid, theta);
    DistortedParts parts;
    auto fill = [&](OperatorMatrix& om, Eigen::MatrixXcd m, BlockLayout layout) {
        om.entries = std::move(m);
        om.layout = layout;
        om.grid = grid;
        om.provenance = {cfg.h, theta, 0.0, to_string(cfg.v1.kind), to_string(cfg.v2.kind)};
        om.channel_dim = grid.interior();
        om.hermitian = theta == 0.0;
    };
    fill(parts.h_theta, b.dense(), BlockLayout::TwoChannel);
    fill(parts.p1_theta, b.p1.dense(), BlockLayout::Scalar);
    fill(parts.p2_theta, b.p2.dense(), BlockLayout::Scalar);
    fill(parts.w_theta, b.w.dense(), BlockLayout::Scalar);
    fill(parts.wstar_theta, b.wstar.dense(), BlockLayout::Scalar);
    parts.h_theta.hermitian = theta == 0.0;
    parts.w_theta.hermitian = false;
    parts.wstar_theta.hermitian = false;
    return parts;
}

double filled_well_v2(const ModelConfig& cfg, double x, double delta, double floor_value) {
    double v2 = eval_potential_real(cfg.v2, x);
    if (v2 >= delta) return v2;
    double t = (v2 - floor_value) / (delta - floor_value);
    if (t <= 0.0) return floor_value;
    // C^2 blend: psi(t) = t S2(t), psi(1) = 1 with matching first two derivatives.
    return floor_value + (delta - floor_value) * t * smoothstep(2, t);
}

TwoChannelBlocks filled_well_blocks(const ModelConfig& cfg, const Grid& grid, double delta,
                                    double floor_value) {
    if (!(delta > 0.0) || !(floor_value > 0.0) || !(delta > floor_value))
        throw ConfigError("filled well requires delta > floor > 0");
    TwoChannelBlocks b = full_blocks(cfg, grid);
    for (int i = 0; i < b.n(); ++i) {
        double x = grid.interior_node(i);
        double v2 = eval_potential_real(cfg.v2, x);
        b.p2.diag[i] += filled_well_v2(cfg, x, delta, floor_value) - v2;
    }
    return b;
}

OperatorMatrix assemble_filled_well(const ModelConfig& cfg, double delta, double floor_value) {
    Grid grid = build_grid(cfg);
    TwoChannelBlocks b = filled_well_blocks(cfg, grid, delta, floor_value);
    OperatorMatrix om;
    om.entries = b.dense();
    om.layout = BlockLayout::TwoChannel;
    om.grid = grid;
    om.provenance = {cfg.h, 0.0, 0.0, to_string(cfg.v1.kind), "filled:" + to_string(cfg.v2.kind)};
    om.channel_dim = grid.interior();
    om.hermitian = om.hermiticity_defect() < 1e-13 * om.entries.cwiseAbs().maxCoeff();
    return om;
}

double cap_profile(double x, double half_length) {
    double x_cap = 0.8 * half_length;
    double ax = std::abs(x);
    if (ax <= x_cap) return 0.0;
    double u = (ax - x_cap) / (half_length - x_cap);
    return u * u * u * u;
}

TwoChannelBlocks cap_blocks(const ModelConfig& cfg, const Grid& grid, double eta) {
    TwoChannelBlocks b = full_blocks(cfg, grid);
    b.eta = eta;
    b.cap.resize(b.n());
    for (int i = 0; i < b.n(); ++i)
        b.cap[i] = cap_profile(grid.interior_node(i), cfg.grid_request.half_length);
    return b;
}

OperatorMatrix assemble_cap(const ModelConfig& cfg, double eta) {
    if (eta < 0.0) throw ConfigError("CAP strength eta must be >= 0");
    Grid grid = build_grid(cfg);
    TwoChannelBlocks b = cap_blocks(cfg, grid, eta);
    OperatorMatrix om;
    om.entries = b.dense();
    om.layout = BlockLayout::TwoChannel;
    om.grid = grid;
    om.provenance = {cfg.h, 0.0, eta, to_string(cfg.v1.kind), to_string(cfg.v2.kind)};
    om.channel_dim = grid.interior();
    om.hermitian = eta == 0.0;
    return om;
}

}  // namespace predisso

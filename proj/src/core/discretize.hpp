#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace predisso {

// Uniform grid on [x_min, x_max] including both endpoints. Operators act on
// the interior nodes with Dirichlet boundary values; interior node i sits at
// x_min + (i+1) dx.
struct Grid {
    double x_min = -12.0;
    double x_max = 12.0;
    int n_points = 1601;

    double dx() const { return (x_max - x_min) / double(n_points - 1); }
    int interior() const { return n_points - 2; }
    double node(int i) const { return x_min + double(i) * dx(); }
    double interior_node(int i) const { return x_min + double(i + 1) * dx(); }
    std::vector<double> interior_nodes() const;
};

Grid build_grid(const ModelConfig& cfg);
// The resolution bound: dx <= h / (10 p_max), p_max = sqrt(max(E_max - min V, 1)),
// E_max = top of the cutoff support + 1.
double max_grid_spacing(const ModelConfig& cfg);

struct Provenance {
    double h = 0.0;
    double theta = 0.0;
    double eta = 0.0;
    std::string v1, v2;
};

enum class BlockLayout { Scalar, TwoChannel };

struct OperatorMatrix {
    Eigen::MatrixXcd entries;
    BlockLayout layout = BlockLayout::Scalar;
    bool hermitian = false;
    Grid grid;
    Provenance provenance;
    int channel_dim = 0;  // N; entries is N x N (scalar) or 2N x 2N

    double hermiticity_defect() const;  // max |A - A^*| entrywise
    void dump_csv(const std::string& path) const;  // row-major "re,im" pairs
};

// Complex tridiagonal N x N block: lower[i] = A(i+1,i), upper[i] = A(i,i+1).
struct Tridiag {
    Eigen::VectorXcd diag, lower, upper;
    int n() const { return int(diag.size()); }
    Tridiag transpose() const { return {diag, upper, lower}; }
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
    Eigen::MatrixXcd dense() const;
};

// The assembled two-channel operator in block form,
//   H_theta = [ P1  hW ; hW^T  P2 ],
// kept as tridiagonal blocks so resolvent applications can use banded LU.
struct TwoChannelBlocks {
    Tridiag p1, p2, w, wstar;
    Grid grid;
    double h = 0.0;
    double theta = 0.0;
    Eigen::VectorXd cap;  // CAP profile on interior nodes (empty = none)
    double eta = 0.0;

    int n() const { return p1.n(); }
    Eigen::MatrixXcd dense() const;
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;             // 2N vector
    Eigen::VectorXcd apply_shifted(const Eigen::VectorXcd& v, Complex z) const;
};

// real symmetric tridiagonal of -h^2 Lap + V (for fast selfadjoint eigensolves)
std::pair<Eigen::VectorXd, Eigen::VectorXd> schrodinger_tridiag(const Grid& grid,
                                                                const PotentialSpec& v,
                                                                double h);

OperatorMatrix assemble_schrodinger(const Grid& grid, const PotentialSpec& v, double h);
std::pair<OperatorMatrix, OperatorMatrix> assemble_coupling(const Grid& grid,
                                                            const CouplingSpec& c, double h);
OperatorMatrix assemble_full(const ModelConfig& cfg);
OperatorMatrix assemble_full(const ModelConfig& cfg, const Grid& grid);

std::pair<Eigen::VectorXd, Eigen::VectorXd> distortion_profile(const Grid& grid,
                                                               const DistortionSpec& d);

struct DistortedParts {
    OperatorMatrix h_theta, p1_theta, p2_theta, w_theta, wstar_theta;
};
DistortedParts assemble_distorted(const ModelConfig& cfg, double theta);

// Block-level assembly used by every resolvent path.
TwoChannelBlocks distorted_blocks(const ModelConfig& cfg, const Grid& grid, double theta);
TwoChannelBlocks full_blocks(const ModelConfig& cfg, const Grid& grid);
TwoChannelBlocks filled_well_blocks(const ModelConfig& cfg, const Grid& grid, double delta,
                                    double floor_value);
TwoChannelBlocks cap_blocks(const ModelConfig& cfg, const Grid& grid, double eta);

OperatorMatrix assemble_filled_well(const ModelConfig& cfg, double delta, double floor_value);
OperatorMatrix assemble_cap(const ModelConfig& cfg, double eta);

double filled_well_v2(const ModelConfig& cfg, double x, double delta, double floor_value);
double cap_profile(double x, double half_length);  // quartic ramp beyond 0.8 L

}  // namespace predisso

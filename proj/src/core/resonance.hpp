#pragma once

#include <memory>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace predisso {

struct WellState {
    double lambda = 0.0;
    Eigen::VectorXd u;  // dx-normalized eigenfunction of P1 on interior nodes
    int index = 0;
};

struct WellBasis {
    std::vector<WellState> states;
    double a = 0.0;        // margin a(h)
    double a_tilde = 0.0;  // min pairwise gap (inf when m = 1)
    double window_lo = 0.0, window_hi = 0.0;
    double dx = 0.0;

    int m() const { return int(states.size()); }
    Eigen::VectorXd lambdas() const;
    Eigen::MatrixXd u_matrix() const;    // N x m
    Eigen::MatrixXd phi_matrix() const;  // 2N x m, second channel zero
};

// Grid, well basis, window and margins with the tracking/auto rules resolved.
// cfg inside holds the resolved absolute window (track_levels cleared).
struct Problem {
    ModelConfig cfg;
    Grid grid;
    WellBasis basis;
    double energy_scale = 1.0;

    double a() const { return basis.a; }
    double eps1() const { return cfg.omega_depth(); }
};

Problem prepare_problem(const ModelConfig& cfg);

WellBasis well_states(const ModelConfig& cfg);

struct Resonance {
    Complex rho;
    double paired_lambda = 0.0;
    int paired_index = 0;
    std::string method;  // "direct" | "feshbach"
    double theta_drift = 0.0;
};

std::vector<Resonance> resonances_direct(const ModelConfig& cfg, double theta);
std::vector<Resonance> resonances_direct(const Problem& p, double theta,
                                         bool fill_drift = true);

// Effective m x m objects over a fixed distorted operator:
//   F(z)_{jk}   via the deflated resolvent of the full H_theta,
//   M0(z)_{jk}  = h^2 < W_theta (P2_theta - z)^{-1} W_theta^* u_k, u_j >,
//   E(z)        = z - Lambda + h^2 F(z).
class EffectiveSystem {
public:
    EffectiveSystem(const Problem& p, double theta);

    Eigen::MatrixXcd f(Complex z) const;
    Eigen::MatrixXcd m0(Complex z) const;
    Eigen::MatrixXcd e_minus_plus(Complex z) const;
    Complex log_det_e(Complex z) const;
    Complex survival_symbol(Complex z, const Eigen::VectorXcd& alpha) const;  // <E^{-1}a,a>

    const Problem& problem() const { return *p_; }
    double theta() const { return theta_; }
    const TwoChannelBlocks& blocks() const { return blocks_; }

private:
    const Problem* p_;
    double theta_;
    TwoChannelBlocks blocks_;
    Eigen::MatrixXd phi_;   // 2N x m
    Eigen::MatrixXd u_;     // N x m
    Eigen::MatrixXcd wsu_;  // W_theta^* u_k columns
    double dx_;
};

Eigen::MatrixXcd m0_matrix(const ModelConfig& cfg, Complex z, double theta,
                           const WellBasis& basis);
// filled-well variant (selfadjoint sea): undistorted blocks with V2 lifted
Eigen::MatrixXcd m0_matrix_filled(const ModelConfig& cfg, Complex z, const WellBasis& basis,
                                  double delta, double floor_value);
Eigen::MatrixXcd f_matrix(const ModelConfig& cfg, Complex z, double theta,
                          const WellBasis& basis);

std::vector<Resonance> resonances_feshbach(const ModelConfig& cfg, double theta,
                                           const WellBasis& basis);
std::vector<Resonance> resonances_feshbach(const Problem& p, double theta);
// Newton on the determinant of E(z) from a given seed.
Complex feshbach_root(const EffectiveSystem& es, Complex seed);

Complex first_order_resonance(const ModelConfig& cfg, const WellBasis& basis, int j);
Complex first_order_resonance(const Problem& p, int j);

double reduced_resolvent_norm(const ModelConfig& cfg, Complex z, double theta);
double reduced_resolvent_norm(const Problem& p, Complex z, double theta);

}  // namespace predisso

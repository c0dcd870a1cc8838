#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resonance.hpp"

namespace predisso {

// Energy cutoff g: 1 on I+[-a,a], 0 outside I+(-2a,2a), C^nu smoothstep on the
// transition bands (nu = 0 is the sharp step at the band midpoint).
struct CutoffFn {
    double lo = 0.0, hi = 0.0, a = 0.0;
    int nu = 0;
    double operator()(double e) const;
    double deriv(int k, double e) const;  // analytic for k <= 2
};

struct CutoffReport {
    std::vector<double> sup_scaled;  // sup |g^(k)| a^k for k = 0..nu
};

std::pair<CutoffFn, CutoffReport> build_cutoff(const CutoffSpec& spec);
CutoffFn cutoff_for(const Problem& p, int nu);

struct StateVector {
    Eigen::VectorXcd ch1, ch2;
    double dx = 0.0;

    int n() const { return int(ch1.size()); }
    Eigen::VectorXcd full() const;
    double norm() const;
    static StateVector from_span(const WellBasis& basis, const Eigen::VectorXcd& coeffs);
};

Eigen::VectorXcd alpha_projection(const StateVector& phi, const WellBasis& basis);

struct SurvivalSeries {
    std::vector<double> times;
    std::vector<Complex> amplitudes;
    std::string backend;  // box_spectral | cap_cn | model
    bool cutoff_applied = false;
    double t_rec = 0.0;  // recurrence horizon (0 = not applicable)
    std::vector<bool> trusted;
    double norm_drift = 0.0;  // cap_cn: | ||psi(end)|| - ||psi(0)|| |
};

// Full Hermitian eigendecomposition of the box operator, shared by the
// spectral backend and the CAP initial-state filter.
struct BoxSpectrum {
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;  // 2-norm orthonormal columns
    double dx = 0.0;
};
BoxSpectrum box_spectrum(const Problem& p);

double recurrence_horizon(const Problem& p);

SurvivalSeries survival_box(const Problem& p, const StateVector& phi, const CutoffFn& g,
                            const std::vector<double>& times, const BoxSpectrum& spec);
SurvivalSeries survival_box(const ModelConfig& cfg, const StateVector& phi, const CutoffFn& g,
                            const std::vector<double>& times);

struct CapOptions {
    double eta = 0.15;
    double dt = 0.0;  // 0 = auto from the spectral-radius bound
};
// the automatic CN step: 0.4 / (Gershgorin radius of H - i eta W_cap)
double cap_auto_dt(const Problem& p, double eta);
SurvivalSeries survival_cap(const Problem& p, const StateVector& phi, const CutoffFn& g,
                            const std::vector<double>& times, const CapOptions& opts,
                            const BoxSpectrum& spec);

struct ResidueSet {
    std::vector<Complex> b;
    int quadrature_nodes_used = 0;
    double richardson_error = 0.0;
};

ResidueSet residues(const EffectiveSystem& es, const std::vector<Resonance>& rhos,
                    const Eigen::VectorXcd& alpha);
ResidueSet residues(const ModelConfig& cfg, const std::vector<Resonance>& rhos,
                    const WellBasis& basis, const Eigen::VectorXcd& alpha, double theta);

SurvivalSeries expansion(const std::vector<Resonance>& rhos, const ResidueSet& res,
                         const std::vector<double>& times);

struct RemainderSeries {
    std::vector<double> abs_r;
    double sup_trusted = 0.0;
};
RemainderSeries remainder(const SurvivalSeries& series, const SurvivalSeries& model);

struct R0Series {
    std::vector<double> times;
    std::vector<Complex> values;
    double eps = 0.0, eps_prime = 0.0;
    double level_spacing = 0.0;
    // extrapolation record from the 1.5 L box
    std::vector<Complex> values_wide;
    double eps_wide = 0.0;
};
R0Series r0_series(const Problem& p, const Eigen::VectorXcd& alpha, const CutoffFn& g,
                   const std::vector<double>& times,
                   std::pair<double, double> eps_pair = {0.0, 0.0},
                   bool with_wide_box = true);

struct NoCutoffResult {
    SurvivalSeries series;
    SurvivalSeries model;
    double sup_difference = 0.0;      // over the trusted window
    double one_minus_g_expectation = 0.0;  // <(1-g(H)) phi, phi> for the configured g
};
NoCutoffResult survival_nocutoff(const Problem& p, const StateVector& phi,
                                 const std::vector<double>& times, const BoxSpectrum& spec,
                                 const std::vector<Resonance>& rhos, const ResidueSet& res,
                                 const CutoffFn& g_configured);

std::vector<double> default_times(const Problem& p, int n_points = 200);
std::vector<double> snap_times(const std::vector<double>& times, double dt);

}  // namespace predisso

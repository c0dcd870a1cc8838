#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace predisso {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Rational functions with real coefficients (ascending powers). All potential
// and coupling presets reduce to this form, so evaluation at complex points is
// exact analytic continuation.
// ---------------------------------------------------------------------------
struct RationalFn {
    std::vector<double> num{0.0};
    std::vector<double> den{1.0};

    Complex eval(Complex z) const;        // throws PoleAtPoint near a zero of den
    Complex derivative(Complex z) const;  // (num' den - num den') / den^2
    double eval_real(double x) const;     // pure real-arithmetic path
    double derivative_real(double x) const;
};

enum class PotentialKind { HarmonicWell, ShiftedQuadratic, LorentzSea, CustomRational };
enum class ChannelRole { Confining, Dissociative, Coefficient };

std::string to_string(PotentialKind k);
PotentialKind potential_kind_from_string(const std::string& s);

// Presets:
//   harmonic_well       V(x) = x^2
//   shifted_quadratic   V(x) = x^2 - c            params = {c}
//   lorentz_sea         V(x) = -Gamma + alpha/(1+x^2), params = {Gamma, alpha}
//   custom_rational     num/den coefficient lists
struct PotentialSpec {
    PotentialKind kind = PotentialKind::CustomRational;
    std::vector<double> params;
    RationalFn custom;
    ChannelRole role = ChannelRole::Coefficient;

    RationalFn as_rational() const;

    static PotentialSpec harmonic_well();
    static PotentialSpec shifted_quadratic(double c);
    static PotentialSpec lorentz_sea(double gamma, double alpha);
    static PotentialSpec rational(std::vector<double> num, std::vector<double> den);
    static PotentialSpec constant(double c);
};

Complex eval_potential(const PotentialSpec& spec, Complex z);
double eval_potential_real(const PotentialSpec& spec, double x);
double eval_potential_deriv_real(const PotentialSpec& spec, double x);

// Coupling operator W = a(x) + b(x) (h D), D the centered first difference.
// The lower-left block of the assembled operator is the exact adjoint of the
// upper-right one, so the full coupling block is Hermitian.
struct CouplingSpec {
    PotentialSpec a_coef = PotentialSpec::constant(0.0);
    PotentialSpec b_coef = PotentialSpec::constant(0.0);
    bool is_zero() const;
};

// Exterior-scaling ramp: f = 0 on |x| <= ramp_start, f = x beyond
// ramp_start + ramp_width, joined by x*S2(u) with the quintic smoothstep S2.
// f is odd and C^2; fprime comes from the closed form, never from differencing.
struct DistortionSpec {
    double theta = 0.15;
    double ramp_start = 2.0;
    double ramp_width = 2.0;
    std::string profile = "quintic";

    double f(double x) const;
    double fprime(double x) const;
    void validate() const;
};

// Energy window I = [center-half_width, center+half_width] with margin a and
// C^nu cutoff g: g = 1 on I+[-a,a], g = 0 outside I+(-2a,2a).
// track_levels > 0 re-centers the window on the lowest k well levels of P1
// before each computation (the margin is then auto-derived from the spectrum).
struct CutoffSpec {
    double window_center = 0.25;
    double window_half_width = 0.05;
    double margin = 0.15;  // a(h)
    int nu = 2;
    int track_levels = 1;
    bool auto_margin = true;

    double lo() const { return window_center - window_half_width; }
    double hi() const { return window_center + window_half_width; }
};

struct GridRequest {
    double half_length = 12.0;
    int n_points = 0;  // 0 = auto from the resolution bound (capped at 4096)
};

struct ModelConfig {
    double h = 0.25;
    PotentialSpec v1 = PotentialSpec::harmonic_well();
    PotentialSpec v2 = PotentialSpec::lorentz_sea(1.0, 2.0);
    CouplingSpec coupling;
    DistortionSpec distortion;
    CutoffSpec cutoff;
    GridRequest grid_request;
    double epsilon1 = 0.0;  // depth of Omega(h); 0 = auto (margin/2)

    void validate_basic() const;  // 0 < h < 1, ramp inside domain, ...
    double sea_depth() const;     // Gamma = -lim V2 (evaluated far out)
    double omega_depth() const;   // epsilon1 with the auto rule applied

    // The 1D example configuration: V1 = x^2, V2 = -1 + 2/(1+x^2),
    // coupling a(x) = 1/(1+x^2), b = 0.
    static ModelConfig preset();
};

struct AssumptionReport {
    bool u_bounded = false;
    double u_diameter = 0.0;
    double liminf_v1 = 0.0;       // min of V1 outside |x| > 0.8 L
    double v2_limit = 0.0;        // V2 at the domain edge
    bool v2_positive_on_u = false;
    double v2_on_u_margin = 0.0;  // min of V2 over {V1 <= 0}
    double virial_margin = 0.0;   // min over the sea of -(2 V2 + x V2')
    std::optional<bool> gap_ok;   // filled after well_states

    bool pass() const;
};

AssumptionReport validate_assumptions(const ModelConfig& cfg);
double virial_margin(const ModelConfig& cfg);

// Polynomial smoothstep S_nu on [0,1]: degree 2 nu + 1, C^nu at both ends.
// S'_nu(u) = c_nu (u(1-u))^nu with c_nu = (2nu+1)! / (nu!)^2.
double smoothstep(int nu, double u);
double smoothstep_d1(int nu, double u);
double smoothstep_d2(int nu, double u);

}  // namespace predisso

#include "model.hpp"

#include <algorithm>
#include <cmath>

namespace predisso {

namespace {

Complex horner(const std::vector<double>& c, Complex z) {
    Complex r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * z + *it;
    return r;
}

double horner_real(const std::vector<double>& c, double x) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
    return r;
}

std::vector<double> poly_deriv(const std::vector<double>& c) {
    std::vector<double> d;
    for (size_t k = 1; k < c.size(); ++k) d.push_back(double(k) * c[k]);
    if (d.empty()) d.push_back(0.0);
    return d;
}

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return r;
}

}  // namespace

Complex RationalFn::eval(Complex z) const {
    Complex q = horner(den, z);
    Complex qp = horner(poly_deriv(den), z);
    // Newton-step estimate of the distance from z to the nearest zero of den.
    double dist = std::abs(qp) > 0.0 ? std::abs(q) / std::abs(qp)
                                     : (std::abs(q) > 0.0 ? 1.0 : 0.0);
    if (dist < 1e-14)
        throw PoleAtPoint("denominator vanishes within 1e-14 of the evaluation point");
    return horner(num, z) / q;
}

Complex RationalFn::derivative(Complex z) const {
    Complex p = horner(num, z), q = horner(den, z);
    Complex pp = horner(poly_deriv(num), z), qp = horner(poly_deriv(den), z);
    if (std::abs(q) == 0.0) throw PoleAtPoint("denominator vanishes at the evaluation point");
    return (pp * q - p * qp) / (q * q);
}

double RationalFn::eval_real(double x) const {
    double q = horner_real(den, x);
    if (q == 0.0) throw PoleAtPoint("denominator vanishes on the real axis");
    return horner_real(num, x) / q;
}

double RationalFn::derivative_real(double x) const {
    double p = horner_real(num, x), q = horner_real(den, x);
    double pp = horner_real(poly_deriv(num), x), qp = horner_real(poly_deriv(den), x);
    if (q == 0.0) throw PoleAtPoint("denominator vanishes on the real axis");
    return (pp * q - p * qp) / (q * q);
}

std::string to_string(PotentialKind k) {
    switch (k) {
        case PotentialKind::HarmonicWell: return "harmonic_well";
        case PotentialKind::ShiftedQuadratic: return "shifted_quadratic";
        case PotentialKind::LorentzSea: return "lorentz_sea";
        case PotentialKind::CustomRational: return "custom_rational";
    }
    return "custom_rational";
}

PotentialKind potential_kind_from_string(const std::string& s) {
    if (s == "harmonic_well") return PotentialKind::HarmonicWell;
    if (s == "shifted_quadratic") return PotentialKind::ShiftedQuadratic;
    if (s == "lorentz_sea") return PotentialKind::LorentzSea;
    if (s == "custom_rational") return PotentialKind::CustomRational;
    throw ConfigError("unknown potential kind '" + s + "'");
}

RationalFn PotentialSpec::as_rational() const {
    switch (kind) {
        case PotentialKind::HarmonicWell:
            return RationalFn{{0.0, 0.0, 1.0}, {1.0}};
        case PotentialKind::ShiftedQuadratic: {
            if (params.size() != 1) throw ConfigError("shifted_quadratic expects params = {c}");
            return RationalFn{{-params[0], 0.0, 1.0}, {1.0}};
        }
        case PotentialKind::LorentzSea: {
            if (params.size() != 2)
                throw ConfigError("lorentz_sea expects params = {Gamma, alpha}");
            double g = params[0], a = params[1];
            // -Gamma + alpha/(1+x^2) = (alpha - Gamma - Gamma x^2)/(1 + x^2)
            return RationalFn{{a - g, 0.0, -g}, {1.0, 0.0, 1.0}};
        }
        case PotentialKind::CustomRational:
            return custom;
    }
    return custom;
}

PotentialSpec PotentialSpec::harmonic_well() {
    PotentialSpec s;
    s.kind = PotentialKind::HarmonicWell;
    s.role = ChannelRole::Confining;
    return s;
}

PotentialSpec PotentialSpec::shifted_quadratic(double c) {
    PotentialSpec s;
    s.kind = PotentialKind::ShiftedQuadratic;
    s.params = {c};
    s.role = ChannelRole::Confining;
    return s;
}

PotentialSpec PotentialSpec::lorentz_sea(double gamma, double alpha) {
    PotentialSpec s;
    s.kind = PotentialKind::LorentzSea;
    s.params = {gamma, alpha};
    s.role = ChannelRole::Dissociative;
    return s;
}

PotentialSpec PotentialSpec::rational(std::vector<double> num, std::vector<double> den) {
    PotentialSpec s;
    s.kind = PotentialKind::CustomRational;
    s.custom = RationalFn{std::move(num), std::move(den)};
    return s;
}

PotentialSpec PotentialSpec::constant(double c) { return rational({c}, {1.0}); }

Complex eval_potential(const PotentialSpec& spec, Complex z) {
    return spec.as_rational().eval(z);
}

double eval_potential_real(const PotentialSpec& spec, double x) {
    return spec.as_rational().eval_real(x);
}

double eval_potential_deriv_real(const PotentialSpec& spec, double x) {
    return spec.as_rational().derivative_real(x);
}

bool CouplingSpec::is_zero() const {
    auto all_zero = [](const PotentialSpec& p) {
        RationalFn r = p.as_rational();
        return std::all_of(r.num.begin(), r.num.end(), [](double c) { return c == 0.0; });
    };
    return all_zero(a_coef) && all_zero(b_coef);
}

// --- smoothstep -------------------------------------------------------------

double smoothstep(int nu, double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    if (nu == 0) return u < 0.5 ? 0.0 : 1.0;  // sharp step at the band midpoint
    double s = 0.0;
    for (int k = 0; k <= nu; ++k)
        s += binom(nu + k, k) * binom(2 * nu + 1, nu - k) * std::pow(-u, k);
    return std::pow(u, nu + 1) * s;
}

double smoothstep_d1(int nu, double u) {
    if (u <= 0.0 || u >= 1.0 || nu == 0) return 0.0;
    double c = 1.0;  // (2nu+1)! / (nu!)^2
    for (int k = 1; k <= nu; ++k) c *= double(nu + k) / double(k);
    c *= double(2 * nu + 1);
    return c * std::pow(u * (1.0 - u), nu);
}

double smoothstep_d2(int nu, double u) {
    if (u <= 0.0 || u >= 1.0 || nu == 0) return 0.0;
    double c = 1.0;
    for (int k = 1; k <= nu; ++k) c *= double(nu + k) / double(k);
    c *= double(2 * nu + 1);
    return c * double(nu) * std::pow(u * (1.0 - u), nu - 1) * (1.0 - 2.0 * u);
}

// --- distortion ramp ---------------------------------------------------------

void DistortionSpec::validate() const {
    if (profile != "quintic") throw ConfigError("unknown distortion profile '" + profile + "'");
    if (ramp_width <= 0.0) throw ConfigError("distortion ramp_width must be positive");
    if (ramp_start < 0.0) throw ConfigError("distortion ramp_start must be nonnegative");
}

double DistortionSpec::f(double x) const {
    double ax = std::abs(x);
    if (ax <= ramp_start) return 0.0;
    if (ax >= ramp_start + ramp_width) return x;
    double u = (ax - ramp_start) / ramp_width;
    return x * smoothstep(2, u);
}

double DistortionSpec::fprime(double x) const {
    double ax = std::abs(x);
    if (ax <= ramp_start) return 0.0;
    if (ax >= ramp_start + ramp_width) return 1.0;
    double u = (ax - ramp_start) / ramp_width;
    return smoothstep(2, u) + ax * smoothstep_d1(2, u) / ramp_width;
}

// --- config ------------------------------------------------------------------

void ModelConfig::validate_basic() const {
    if (!(h > 0.0 && h < 1.0)) throw ConfigError("h must lie in (0,1)");
    distortion.validate();
    if (distortion.ramp_start + distortion.ramp_width >= grid_request.half_length)
        throw RampOutOfDomain("distortion ramp must finish inside the domain");
    if (cutoff.nu < 0) throw ConfigError("cutoff smoothness nu must be >= 0");
    if (cutoff.window_half_width <= 0.0) throw ConfigError("window_half_width must be positive");
    if (grid_request.half_length <= 0.0) throw ConfigError("half_length must be positive");
    if (std::abs(distortion.theta) > 0.3) throw ConfigError("|theta| must be <= 0.3");
}

double ModelConfig::sea_depth() const {
    // V2 tends to -Gamma at infinity; the presets are rational, so the edge
    // value is within O(1/L^2) of the limit.
    if (v2.kind == PotentialKind::LorentzSea) return v2.params[0];
    return -eval_potential_real(v2, 1e6);
}

double ModelConfig::omega_depth() const {
    return epsilon1 > 0.0 ? epsilon1 : 0.5 * cutoff.margin;
}

ModelConfig ModelConfig::preset() {
    ModelConfig cfg;
    cfg.h = 0.25;
    cfg.v1 = PotentialSpec::harmonic_well();
    cfg.v2 = PotentialSpec::lorentz_sea(1.0, 2.0);
    cfg.coupling.a_coef = PotentialSpec::rational({1.0}, {1.0, 0.0, 1.0});
    cfg.coupling.b_coef = PotentialSpec::constant(0.0);
    cfg.distortion = DistortionSpec{};
    cfg.cutoff = CutoffSpec{};
    cfg.grid_request = GridRequest{};
    return cfg;
}

// --- assumption checks --------------------------------------------------------

namespace {

// 4x the solver grid density, restricted to the computational domain.
std::vector<double> refined_grid(const ModelConfig& cfg) {
    double L = cfg.grid_request.half_length;
    int n = cfg.grid_request.n_points > 0 ? cfg.grid_request.n_points : 1601;
    int m = 4 * (n - 1) + 1;
    std::vector<double> xs(m);
    for (int i = 0; i < m; ++i) xs[i] = -L + 2.0 * L * double(i) / double(m - 1);
    return xs;
}

}  // namespace

double virial_margin(const ModelConfig& cfg) {
    auto xs = refined_grid(cfg);
    double margin = std::numeric_limits<double>::infinity();
    bool sea_found = false;
    for (double x : xs) {
        double v2 = eval_potential_real(cfg.v2, x);
        if (v2 > 0.0) continue;
        sea_found = true;
        double v2p = eval_potential_deriv_real(cfg.v2, x);
        margin = std::min(margin, -(2.0 * v2 + x * v2p));
    }
    if (!sea_found) throw EmptySea("{V2 <= 0} does not intersect the grid");
    return margin;
}

AssumptionReport validate_assumptions(const ModelConfig& cfg) {
    AssumptionReport rep;
    auto xs = refined_grid(cfg);
    double L = cfg.grid_request.half_length;

    double u_min = std::numeric_limits<double>::infinity();
    double u_max = -std::numeric_limits<double>::infinity();
    double v2_on_u = std::numeric_limits<double>::infinity();
    double v1_outside = std::numeric_limits<double>::infinity();
    bool u_nonempty = false;
    for (double x : xs) {
        double v1 = eval_potential_real(cfg.v1, x);
        if (v1 <= 0.0) {
            u_nonempty = true;
            u_min = std::min(u_min, x);
            u_max = std::max(u_max, x);
            v2_on_u = std::min(v2_on_u, eval_potential_real(cfg.v2, x));
        }
        if (std::abs(x) > 0.8 * L) v1_outside = std::min(v1_outside, v1);
    }

    rep.u_diameter = u_nonempty ? (u_max - u_min) : 0.0;
    // Bounded well, and the distortion identity region must cover it.
    double cover = cfg.distortion.ramp_start;
    rep.u_bounded = u_nonempty && rep.u_diameter < 0.8 * (2.0 * L) &&
                    u_min > -cover && u_max < cover;
    rep.liminf_v1 = v1_outside;
    rep.v2_limit = eval_potential_real(cfg.v2, L);
    rep.v2_on_u_margin = u_nonempty ? v2_on_u : 0.0;
    rep.v2_positive_on_u = u_nonempty && v2_on_u > 0.0;
    try {
        rep.virial_margin = virial_margin(cfg);
    } catch (const EmptySea&) {
        rep.virial_margin = -std::numeric_limits<double>::infinity();
    }
    return rep;
}

bool AssumptionReport::pass() const {
    bool base = u_bounded && liminf_v1 > 0.0 && v2_limit < 0.0 && v2_positive_on_u &&
                virial_margin > 0.0;
    if (gap_ok.has_value()) base = base && *gap_ok;
    return base;
}

}  // namespace predisso

#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "evolve.hpp"

namespace predisso {

struct FitResult {
    double exponent = 0.0;  // power-law slope, or decay rate C0 for exp fits
    double intercept = 0.0;
    double r_squared = 0.0;
    int points_used = 0;
};

FitResult fit_power(const std::vector<double>& xs, const std::vector<double>& ys);
FitResult fit_exp_rate(const std::vector<double>& hs, const std::vector<double>& widths);

// Everything one h-point of the verification pipeline produces. Failures are
// per-point: a record with a nonempty error leaves the rest of the sweep alone.
struct SweepRecord {
    double h = 0.0;
    std::string error;  // empty = ok; otherwise "Code: message"

    int n_points = 0;
    double a = 0.0, a_tilde = 0.0, eps1 = 0.0;
    std::vector<double> lambdas;
    std::vector<Complex> rho_direct, rho_feshbach, first_order;
    std::vector<double> theta_drift;
    std::vector<Complex> b;
    double richardson_error = 0.0;
    double phi_norm2 = 1.0;
    double sum_b_defect = 0.0;  // |sum b_j - |phi|^2|

    double sup_r_nu0 = 0.0;     // sup_{t<=T_rec/2} |r(t)| with the sharp cutoff
    double sup_r_smooth = 0.0;  // same with the configured C^nu cutoff
    double sup_r_minus_r0 = 0.0;
    double sup_r0 = 0.0;
    double sup_r_minus_r0_wide = 0.0;  // against the 1.5L-box r0 record
    double nocutoff_sup = 0.0;
    double one_minus_g = 0.0;

    double max_abs_amplitude = 0.0;  // over every computed box series

    double norm_m0 = 0.0;          // ||M0(lambda_1)||
    double norm_m1 = 0.0;          // ||h^2 F - M0|| at lambda_1
    double norm_h2f_contour = 0.0; // max ||h^2 F(z)|| on the residue contour
    double redres_a_real = 0.0;    // ||red. resolvent|| * a at z = I_hi + a
    double redres_a_complex = 0.0; // same at z = I_hi + a - i eps1
    double f11_abs = 0.0, f11_deriv_abs = 0.0;

    double seconds = 0.0;
};

struct SweepOptions {
    double theta = 0.0;        // 0 = take the config value
    bool with_direct = true;   // dense distorted eigensolve (the expensive part)
    bool with_evolution = true;
    bool with_drift = true;
};

SweepRecord run_sweep_point(const ModelConfig& base, double h, const SweepOptions& opts);
std::vector<SweepRecord> h_sweep(const ModelConfig& base, const std::vector<double>& hs,
                                 const SweepOptions& opts = {});

nlohmann::json sweep_record_json(const SweepRecord& r);
std::string sweep_csv(const std::vector<SweepRecord>& records);

// Runs every acceptance criterion on the given configuration and returns the
// "predissonance-report/1" document. Overall status is in report["pass"].
nlohmann::json run_acceptance(const ModelConfig& cfg);

}  // namespace predisso

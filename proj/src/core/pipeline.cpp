#include "pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "config_io.hpp"

namespace predisso {

using nlohmann::json;

namespace {

json complex_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

json resonance_json(const Resonance& r) {
    return {{"rho_re", r.rho.real()},
            {"rho_im", r.rho.imag()},
            {"lambda", r.paired_lambda},
            {"method", r.method},
            {"drift", r.theta_drift}};
}

json series_json(const SurvivalSeries& s, const std::string& hash) {
    json times = json::array(), amps = json::array();
    for (size_t i = 0; i < s.times.size(); ++i) {
        times.push_back(s.times[i]);
        amps.push_back(complex_json(s.amplitudes[i]));
    }
    json j{{"config_hash", hash},      {"backend", s.backend},
           {"cutoff_applied", s.cutoff_applied}, {"t_rec", s.t_rec},
           {"times", times},           {"amplitudes", amps}};
    if (!s.trusted.empty()) {
        json tr = json::array();
        for (bool b : s.trusted) tr.push_back(b);
        j["trusted"] = tr;
    }
    return j;
}

std::string series_csv(const SurvivalSeries& s, const std::string& hash) {
    std::ostringstream out;
    out << "# config_hash=" << hash << " backend=" << s.backend << "\n";
    out << "t,re,im\n";
    for (size_t i = 0; i < s.times.size(); ++i)
        out << s.times[i] << ',' << s.amplitudes[i].real() << ',' << s.amplitudes[i].imag()
            << '\n';
    return out.str();
}

void maybe_write(const std::string& dir, const std::string& name, const std::string& text) {
    if (dir.empty()) return;
    atomic_write((std::filesystem::path(dir) / name).string(), text);
}

json assumption_json(const AssumptionReport& rep) {
    json j{{"u_bounded", rep.u_bounded},
           {"u_diameter", rep.u_diameter},
           {"liminf_v1", rep.liminf_v1},
           {"v2_limit", rep.v2_limit},
           {"v2_positive_on_u", rep.v2_positive_on_u},
           {"v2_on_u_margin", rep.v2_on_u_margin},
           {"virial_margin", rep.virial_margin},
           {"pass", rep.pass()}};
    if (rep.gap_ok) j["gap_ok"] = *rep.gap_ok;
    return j;
}

ModelConfig with_options(const ModelConfig& cfg_in, const RunOptions& opts) {
    ModelConfig cfg = cfg_in;
    if (opts.theta) cfg.distortion.theta = *opts.theta;
    if (opts.nu) cfg.cutoff.nu = *opts.nu;
    return cfg;
}

}  // namespace

std::vector<double> parse_times(const std::string& spec) {
    // t0:t1:n or t0:t1:n:log
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3 && parts.size() != 4)
        throw ConfigError("times spec must be t0:t1:n or t0:t1:n:log");
    double t0, t1;
    int n;
    try {
        t0 = std::stod(parts[0]);
        t1 = std::stod(parts[1]);
        n = std::stoi(parts[2]);
    } catch (...) {
        throw ConfigError("cannot parse times spec '" + spec + "'");
    }
    bool log = parts.size() == 4;
    if (log && parts[3] != "log") throw ConfigError("times spec suffix must be 'log'");
    if (n < 2 || t1 <= t0) throw ConfigError("times spec needs n >= 2 and t1 > t0");
    if (log && t0 <= 0.0) throw ConfigError("log-spaced times need t0 > 0");
    std::vector<double> ts(n);
    for (int i = 0; i < n; ++i) {
        double u = double(i) / double(n - 1);
        ts[i] = log ? t0 * std::pow(t1 / t0, u) : t0 + (t1 - t0) * u;
    }
    return ts;
}

json run_command(const ModelConfig& cfg_in, const std::string& command, const RunOptions& opts,
                 const std::string& output_dir) {
    ModelConfig cfg = with_options(cfg_in, opts);
    std::string hash = config_hash(cfg);

    if (command == "validate") {
        AssumptionReport rep = validate_assumptions(cfg);
        try {
            Problem p = prepare_problem(cfg);
            rep.gap_ok = true;
            (void)p;
        } catch (const GapViolation&) {
            rep.gap_ok = false;
        } catch (const Error&) {
            // grid or window failures leave the gap check unset
        }
        json j = assumption_json(rep);
        j["config_hash"] = hash;
        maybe_write(output_dir, "validate.json", j.dump(2) + "\n");
        return j;
    }

    if (command == "spectrum") {
        Problem p = prepare_problem(cfg);
        json states = json::array();
        for (const auto& s : p.basis.states)
            states.push_back({{"index", s.index}, {"lambda", s.lambda}});
        json j{{"config_hash", hash},
               {"window", {p.basis.window_lo, p.basis.window_hi}},
               {"a", p.basis.a},
               {"a_tilde", std::isfinite(p.basis.a_tilde) ? json(p.basis.a_tilde) : json()},
               {"epsilon1", p.eps1()},
               {"n_points", p.grid.n_points},
               {"dx", p.grid.dx()},
               {"states", states}};
        maybe_write(output_dir, "spectrum.json", j.dump(2) + "\n");
        return j;
    }

    if (command == "resonances") {
        Problem p = prepare_problem(cfg);
        double theta = cfg.distortion.theta;
        auto direct = resonances_direct(p, theta);
        auto fesh = resonances_feshbach(p, theta);
        json list = json::array();
        for (const auto& r : direct) list.push_back(resonance_json(r));
        for (const auto& r : fesh) list.push_back(resonance_json(r));
        json fo = json::array();
        for (int j = 1; j <= p.basis.m(); ++j)
            fo.push_back(complex_json(first_order_resonance(p, j)));
        json j{{"config_hash", hash},
               {"theta", theta},
               {"resonances", list},
               {"first_order", fo}};
        maybe_write(output_dir, "resonances.json", j.dump(2) + "\n");
        return j;
    }

    if (command == "evolve" || command == "compare") {
        Problem p = prepare_problem(cfg);
        double theta = cfg.distortion.theta;
        EffectiveSystem es(p, theta);
        auto fesh = resonances_feshbach(p, theta);
        Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(p.basis.m());
        e1[0] = 1.0;
        StateVector phi = StateVector::from_span(p.basis, e1);
        Eigen::VectorXcd alpha = alpha_projection(phi, p.basis);
        ResidueSet res = residues(es, fesh, alpha);
        BoxSpectrum box = box_spectrum(p);
        CutoffFn g = cutoff_for(p, cfg.cutoff.nu);

        std::vector<double> times =
            opts.times.empty() ? default_times(p) : parse_times(opts.times);

        SurvivalSeries sbox = survival_box(p, phi, g, times, box);
        SurvivalSeries model = expansion(fesh, res, times);
        RemainderSeries rem = remainder(sbox, model);

        json j{{"config_hash", hash},
               {"backend", "box_spectral"},
               {"t_rec", sbox.t_rec},
               {"sup_remainder_trusted", rem.sup_trusted},
               {"residues", json::array()},
               {"resonances", json::array()}};
        for (const auto& r : fesh) j["resonances"].push_back(resonance_json(r));
        for (Complex b : res.b) j["residues"].push_back(complex_json(b));
        maybe_write(output_dir, "survival_box.csv", series_csv(sbox, hash));
        maybe_write(output_dir, "expansion.csv", series_csv(model, hash));
        maybe_write(output_dir, "survival_box.json", series_json(sbox, hash).dump(2) + "\n");

        if (command == "compare") {
            CapOptions copt;
            copt.dt = cap_auto_dt(p, copt.eta);
            std::vector<double> ts = snap_times(times, copt.dt);
            SurvivalSeries cap = survival_cap(p, phi, g, ts, copt, box);
            SurvivalSeries sbox2 = survival_box(p, phi, g, ts, box);
            double sup_gap = 0.0, sup_box = 0.0;
            for (size_t k = 0; k < ts.size(); ++k) {
                if (!sbox2.trusted.empty() && !sbox2.trusted[k]) continue;
                sup_gap = std::max(sup_gap,
                                   std::abs(sbox2.amplitudes[k] - cap.amplitudes[k]));
                sup_box = std::max(sup_box, std::abs(sbox2.amplitudes[k]));
            }
            j["backend_gap_trusted"] = sup_gap;
            j["backend_gap_relative"] = sup_gap / std::max(sup_box, 1e-300);
            j["cap_eta"] = copt.eta;
            j["cap_dt"] = copt.dt;
            maybe_write(output_dir, "survival_cap.csv", series_csv(cap, hash));
            maybe_write(output_dir, "survival_cap.json",
                        series_json(cap, hash).dump(2) + "\n");
        }
        maybe_write(output_dir, command + ".json", j.dump(2) + "\n");
        return j;
    }

    if (command == "sweep") {
        std::vector<double> hs = {0.35, 0.30, 0.25, 0.20};
        auto records = h_sweep(cfg, hs, SweepOptions{});
        json arr = json::array();
        for (const auto& r : records) arr.push_back(sweep_record_json(r));
        json j{{"config_hash", hash}, {"hs", hs}, {"records", arr}};
        maybe_write(output_dir, "sweep.json", j.dump(2) + "\n");
        std::string csv = "# config_hash=" + hash + "\n" + sweep_csv(records);
        maybe_write(output_dir, "sweep.csv", csv);
        return j;
    }

    if (command == "accept") {
        json report = run_acceptance(cfg);
        maybe_write(output_dir, "accept_report.json", report.dump(2) + "\n");
        return report;
    }

    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace predisso

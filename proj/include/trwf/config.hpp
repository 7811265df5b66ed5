#pragma once
#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "trwf/errors.hpp"

namespace trwf {

// Stamped into every manifest so bundles are traceable to the code that
// produced them. Bump on changes that alter emitted numbers.
inline constexpr const char* kCodeVersion = "0.2.0";

enum class Scenario { squeezed, subtracted, single_photon, eos, reconstruct, extract_mode };

inline Scenario scenario_from_name(const std::string& s) {
    if (s == "squeezed") return Scenario::squeezed;
    if (s == "subtracted") return Scenario::subtracted;
    if (s == "single-photon") return Scenario::single_photon;
    if (s == "eos") return Scenario::eos;
    if (s == "reconstruct") return Scenario::reconstruct;
    if (s == "extract-mode") return Scenario::extract_mode;
    throw ConfigInvalid("scenario: unknown value '" + s + "'");
}

inline std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::squeezed: return "squeezed";
        case Scenario::subtracted: return "subtracted";
        case Scenario::single_photon: return "single-photon";
        case Scenario::eos: return "eos";
        case Scenario::reconstruct: return "reconstruct";
        case Scenario::extract_mode: return "extract-mode";
    }
    throw ConfigInvalid("scenario: unmapped enum value");
}

// Fully resolved run plan. Every field has a scenario default; user JSON only
// overrides. Unit suffixes are part of the field names on purpose.
struct ExperimentConfig {
    Scenario scenario = Scenario::squeezed;

    // driving pulse and conformal map strength
    double r_eff = 5.0;
    double delta_d_fs = 16.0;

    // gate
    double delta_p_fs = 5.8;
    double cep_phase_rad = 0.0;

    // delay sweep and the delays used for phase-space snapshots
    double delay_start_fs = -16.0;
    double delay_stop_fs = 2.0;
    double delay_step_fs = 0.1;
    double snapshot_t_d_fs = -14.1;
    double snapshot_sub_t_d_fs = -13.8;

    // frequency band and kernel time window
    double band_min_thz = 0.1;
    double band_max_thz = 420.0;
    int band_n = 256;
    double time_half_width_fs = 150.0;
    int time_n = 1201;
    double mode_threshold = 1e-3;

    // phase-space raster
    double phase_space_half_width = 5.0;
    int phase_space_n = 129;

    // tomography budgets
    std::int64_t n_samples = 200000;
    int n_phases = 64;
    int moment_order = 4;
    std::uint64_t seed = 7071;

    // electro-optic realization
    double probe_center_thz = 255.0;
    double probe_width_thz = 33.0;
    double probe_duration_fwhm_fs = 16.0;
    double scan_min_thz = 150.0;
    double scan_max_thz = 300.0;
    double scan_step_thz = 5.0;
    double eos_thz_bottom_thz = 1.0;
    double eos_thz_top_thz = 130.0;
    double eos_nir_top_thz = 450.0;
    int eos_n_thz = 200;
    int eos_n_nir = 600;

    int threads = 1;
};

inline ExperimentConfig default_config(Scenario s) {
    ExperimentConfig c;
    c.scenario = s;
    switch (s) {
        case Scenario::squeezed:
            break; // struct defaults are the squeezed recipe
        case Scenario::subtracted:
            // wide gate: metrological power and the negativity dip both peak
            // near -7.5 fs on this trace
            c.delta_p_fs = 24.5;
            c.delay_start_fs = -30.0;
            c.delay_stop_fs = 10.0;
            c.delay_step_fs = 0.2;
            c.snapshot_t_d_fs = -7.6;
            break;
        case Scenario::single_photon:
            c.r_eff = 0.1;
            c.delta_p_fs = 18.47;
            c.mode_threshold = 1e-4;
            c.delay_start_fs = -3.0;
            c.delay_stop_fs = 3.0;
            c.delay_step_fs = 0.05;
            c.snapshot_t_d_fs = -0.25;
            c.phase_space_half_width = 6.0;
            c.phase_space_n = 161;
            break;
        case Scenario::eos:
            // linear-response strength; shapes are amplitude independent here
            c.r_eff = 0.02;
            c.time_half_width_fs = 100.0;
            c.time_n = 4001;
            break;
        case Scenario::reconstruct:
            c.moment_order = 2;
            c.phase_space_half_width = 6.0;
            c.phase_space_n = 385;
            break;
        case Scenario::extract_mode:
            c.r_eff = 0.1;
            c.mode_threshold = 1e-4;
            c.delay_start_fs = -44.625;
            c.delay_stop_fs = 44.625;
            c.delay_step_fs = 0.35;
            c.snapshot_t_d_fs = 0.0;
            break;
    }
    return c;
}

namespace detail {

using json = nlohmann::json;

inline double req_num(const json& j, const std::string& ctx, const std::string& key,
                      double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw ConfigInvalid(ctx + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

inline int req_int(const json& j, const std::string& ctx, const std::string& key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer())
        throw ConfigInvalid(ctx + "." + key + ": expected an integer");
    return j.at(key).get<int>();
}

// Unknown keys are rejected so a typo cannot silently fall back to a default.
// Keys starting with '_' are metadata (version stamps) and pass through.
inline void check_keys(const json& j, const std::string& ctx,
                       std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.key().empty() && it.key()[0] == '_') continue;
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) { ok = true; break; }
        if (!ok) throw ConfigInvalid(ctx + ": unknown field '" + it.key() + "'");
    }
}

} // namespace detail

inline void validate_config(const ExperimentConfig& c) {
    auto positive = [](double v, const char* field) {
        if (!(v > 0.0)) throw ConfigInvalid(std::string(field) + ": must be positive");
    };
    positive(c.delta_d_fs, "pulse.delta_d_fs");
    if (c.r_eff < 0.0) throw ConfigInvalid("pulse.r_eff: must be non-negative");
    positive(c.delta_p_fs, "gate.delta_p_fs");
    positive(c.delay_step_fs, "delays.step_fs");
    if (c.delay_stop_fs < c.delay_start_fs)
        throw ConfigInvalid("delays.stop_fs: must be >= delays.start_fs");
    positive(c.band_min_thz, "band.min_thz");
    if (c.band_max_thz <= c.band_min_thz)
        throw ConfigInvalid("band.max_thz: must exceed band.min_thz");
    if (c.band_n < 2) throw ConfigInvalid("band.n: need at least 2 nodes");
    positive(c.time_half_width_fs, "time_window.half_width_fs");
    if (c.time_n < 3) throw ConfigInvalid("time_window.n: need at least 3 nodes");
    positive(c.mode_threshold, "mode_threshold");
    positive(c.phase_space_half_width, "phase_space.half_width");
    if (c.phase_space_n < 2) throw ConfigInvalid("phase_space.n: need at least 2 nodes");
    if (c.n_samples < 1) throw ConfigInvalid("sampling.n_samples: must be positive");
    if (c.n_phases < 1) throw ConfigInvalid("sampling.n_phases: must be positive");
    if (c.moment_order < 1) throw ConfigInvalid("sampling.order: must be positive");
    positive(c.probe_center_thz, "eos.probe_center_thz");
    positive(c.probe_width_thz, "eos.probe_width_thz");
    positive(c.probe_duration_fwhm_fs, "eos.probe_duration_fwhm_fs");
    positive(c.scan_min_thz, "eos.scan.min_thz");
    positive(c.scan_step_thz, "eos.scan.step_thz");
    if (c.scan_max_thz < c.scan_min_thz)
        throw ConfigInvalid("eos.scan.max_thz: must be >= eos.scan.min_thz");
    positive(c.eos_thz_bottom_thz, "eos.band.thz_bottom_thz");
    if (c.eos_thz_top_thz <= c.eos_thz_bottom_thz)
        throw ConfigInvalid("eos.band.thz_top_thz: must exceed thz_bottom_thz");
    if (c.eos_nir_top_thz <= 0.0)
        throw ConfigInvalid("eos.band.nir_top_thz: must be positive");
    if (c.eos_n_thz < 2 || c.eos_n_nir < 2)
        throw ConfigInvalid("eos.band.n_thz/n_nir: need at least 2 nodes");
    if (c.threads < 1) throw ConfigInvalid("threads: must be at least 1");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::req_int;
    using detail::req_num;
    if (!j.is_object()) throw ConfigInvalid("top level: expected a JSON object");
    check_keys(j, "top level",
               {"scenario", "pulse", "gate", "delays", "band", "time_window", "mode_threshold",
                "phase_space", "sampling", "eos", "threads"});
    if (!j.contains("scenario") || !j.at("scenario").is_string())
        throw ConfigInvalid("scenario: required string field");
    ExperimentConfig c = default_config(scenario_from_name(j.at("scenario").get<std::string>()));

    if (j.contains("pulse")) {
        const auto& p = j.at("pulse");
        check_keys(p, "pulse", {"r_eff", "delta_d_fs"});
        c.r_eff = req_num(p, "pulse", "r_eff", c.r_eff);
        c.delta_d_fs = req_num(p, "pulse", "delta_d_fs", c.delta_d_fs);
    }
    if (j.contains("gate")) {
        const auto& g = j.at("gate");
        check_keys(g, "gate", {"delta_p_fs", "cep_phase_rad"});
        c.delta_p_fs = req_num(g, "gate", "delta_p_fs", c.delta_p_fs);
        c.cep_phase_rad = req_num(g, "gate", "cep_phase_rad", c.cep_phase_rad);
    }
    if (j.contains("delays")) {
        const auto& d = j.at("delays");
        check_keys(d, "delays", {"start_fs", "stop_fs", "step_fs", "snapshot_fs", "snapshot_sub_fs"});
        c.delay_start_fs = req_num(d, "delays", "start_fs", c.delay_start_fs);
        c.delay_stop_fs = req_num(d, "delays", "stop_fs", c.delay_stop_fs);
        c.delay_step_fs = req_num(d, "delays", "step_fs", c.delay_step_fs);
        c.snapshot_t_d_fs = req_num(d, "delays", "snapshot_fs", c.snapshot_t_d_fs);
        c.snapshot_sub_t_d_fs = req_num(d, "delays", "snapshot_sub_fs", c.snapshot_sub_t_d_fs);
    }
    if (j.contains("band")) {
        const auto& b = j.at("band");
        check_keys(b, "band", {"min_thz", "max_thz", "n"});
        c.band_min_thz = req_num(b, "band", "min_thz", c.band_min_thz);
        c.band_max_thz = req_num(b, "band", "max_thz", c.band_max_thz);
        c.band_n = req_int(b, "band", "n", c.band_n);
    }
    if (j.contains("time_window")) {
        const auto& t = j.at("time_window");
        check_keys(t, "time_window", {"half_width_fs", "n"});
        c.time_half_width_fs = req_num(t, "time_window", "half_width_fs", c.time_half_width_fs);
        c.time_n = req_int(t, "time_window", "n", c.time_n);
    }
    if (j.contains("mode_threshold")) {
        if (!j.at("mode_threshold").is_number())
            throw ConfigInvalid("mode_threshold: expected a number");
        c.mode_threshold = j.at("mode_threshold").get<double>();
    }
    if (j.contains("phase_space")) {
        const auto& p = j.at("phase_space");
        check_keys(p, "phase_space", {"half_width", "n"});
        c.phase_space_half_width = req_num(p, "phase_space", "half_width", c.phase_space_half_width);
        c.phase_space_n = req_int(p, "phase_space", "n", c.phase_space_n);
    }
    if (j.contains("sampling")) {
        const auto& s = j.at("sampling");
        check_keys(s, "sampling", {"n_samples", "n_phases", "order", "seed"});
        if (s.contains("n_samples")) {
            if (!s.at("n_samples").is_number_integer())
                throw ConfigInvalid("sampling.n_samples: expected an integer");
            c.n_samples = s.at("n_samples").get<std::int64_t>();
        }
        c.n_phases = req_int(s, "sampling", "n_phases", c.n_phases);
        c.moment_order = req_int(s, "sampling", "order", c.moment_order);
        if (s.contains("seed")) {
            if (!s.at("seed").is_number_integer())
                throw ConfigInvalid("sampling.seed: expected an integer");
            c.seed = s.at("seed").get<std::uint64_t>();
        }
    }
    if (j.contains("eos")) {
        const auto& e = j.at("eos");
        check_keys(e, "eos",
                   {"probe_center_thz", "probe_width_thz", "probe_duration_fwhm_fs",
                    "scan", "band"});
        c.probe_center_thz = req_num(e, "eos", "probe_center_thz", c.probe_center_thz);
        c.probe_width_thz = req_num(e, "eos", "probe_width_thz", c.probe_width_thz);
        c.probe_duration_fwhm_fs =
            req_num(e, "eos", "probe_duration_fwhm_fs", c.probe_duration_fwhm_fs);
        if (e.contains("scan")) {
            const auto& s = e.at("scan");
            check_keys(s, "eos.scan", {"min_thz", "max_thz", "step_thz"});
            c.scan_min_thz = req_num(s, "eos.scan", "min_thz", c.scan_min_thz);
            c.scan_max_thz = req_num(s, "eos.scan", "max_thz", c.scan_max_thz);
            c.scan_step_thz = req_num(s, "eos.scan", "step_thz", c.scan_step_thz);
        }
        if (e.contains("band")) {
            const auto& b = e.at("band");
            check_keys(b, "eos.band",
                       {"thz_bottom_thz", "thz_top_thz", "nir_top_thz", "n_thz", "n_nir"});
            c.eos_thz_bottom_thz = req_num(b, "eos.band", "thz_bottom_thz", c.eos_thz_bottom_thz);
            c.eos_thz_top_thz = req_num(b, "eos.band", "thz_top_thz", c.eos_thz_top_thz);
            c.eos_nir_top_thz = req_num(b, "eos.band", "nir_top_thz", c.eos_nir_top_thz);
            c.eos_n_thz = req_int(b, "eos.band", "n_thz", c.eos_n_thz);
            c.eos_n_nir = req_int(b, "eos.band", "n_nir", c.eos_n_nir);
        }
    }
    if (j.contains("threads")) {
        if (!j.at("threads").is_number_integer())
            throw ConfigInvalid("threads: expected an integer");
        c.threads = j.at("threads").get<int>();
    }
    validate_config(c);
    return c;
}

// Canonical echo: feeding the result back through config_from_json reproduces
// the identical plan, which is what makes emitted manifests re-runnable.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["scenario"] = scenario_name(c.scenario);
    j["pulse"] = {{"r_eff", c.r_eff}, {"delta_d_fs", c.delta_d_fs}};
    j["gate"] = {{"delta_p_fs", c.delta_p_fs}, {"cep_phase_rad", c.cep_phase_rad}};
    j["delays"] = {{"start_fs", c.delay_start_fs},
                   {"stop_fs", c.delay_stop_fs},
                   {"step_fs", c.delay_step_fs},
                   {"snapshot_fs", c.snapshot_t_d_fs},
                   {"snapshot_sub_fs", c.snapshot_sub_t_d_fs}};
    j["band"] = {{"min_thz", c.band_min_thz}, {"max_thz", c.band_max_thz}, {"n", c.band_n}};
    j["time_window"] = {{"half_width_fs", c.time_half_width_fs}, {"n", c.time_n}};
    j["mode_threshold"] = c.mode_threshold;
    j["phase_space"] = {{"half_width", c.phase_space_half_width}, {"n", c.phase_space_n}};
    j["sampling"] = {{"n_samples", c.n_samples},
                     {"n_phases", c.n_phases},
                     {"order", c.moment_order},
                     {"seed", c.seed}};
    j["eos"] = {{"probe_center_thz", c.probe_center_thz},
                {"probe_width_thz", c.probe_width_thz},
                {"probe_duration_fwhm_fs", c.probe_duration_fwhm_fs},
                {"scan",
                 {{"min_thz", c.scan_min_thz},
                  {"max_thz", c.scan_max_thz},
                  {"step_thz", c.scan_step_thz}}},
                {"band",
                 {{"thz_bottom_thz", c.eos_thz_bottom_thz},
                  {"thz_top_thz", c.eos_thz_top_thz},
                  {"nir_top_thz", c.eos_nir_top_thz},
                  {"n_thz", c.eos_n_thz},
                  {"n_nir", c.eos_n_nir}}}};
    j["threads"] = c.threads;
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid("config file " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace trwf

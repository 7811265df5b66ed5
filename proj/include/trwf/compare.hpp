#pragma once
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trwf/config.hpp"
#include "trwf/eos.hpp"
#include "trwf/errors.hpp"

namespace trwf {

// Numeric CSV loaded back from a bundle. Comparison always recomputes its
// measured values from these columns, so edits to an emitted file surface as
// a failed criterion rather than passing silently.
struct CsvTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;

    const std::vector<double>& col(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return cols[k];
        throw MissingArtifact("csv column '" + name + "' not found");
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact(path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw MissingArtifact(path + " is empty");
    std::stringstream hdr(line);
    std::string cell;
    while (std::getline(hdr, cell, ',')) t.names.push_back(cell);
    t.cols.resize(t.names.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::size_t k = 0;
        while (std::getline(row, cell, ',')) {
            if (k >= t.cols.size())
                throw ConfigInvalid(path + ":" + std::to_string(lineno) + ": extra column");
            try {
                t.cols[k].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigInvalid(path + ":" + std::to_string(lineno) +
                                    ": non-numeric cell '" + cell + "'");
            }
            ++k;
        }
        if (k != t.cols.size())
            throw ConfigInvalid(path + ":" + std::to_string(lineno) + ": short row");
    }
    return t;
}

namespace detail {

inline std::size_t argext(const std::vector<double>& v, bool want_max) {
    if (v.empty()) throw ConfigInvalid("metric column is empty");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (want_max ? v[i] > v[best] : v[i] < v[best]) best = i;
    return best;
}

// Evaluate one metric expression against a table. Supported ops:
//   max/min        extremum of "col"
//   arg_at_max/min value of "col" at the extremum of "by"
//   cell           entry of "col" at integer "row"
//   relspread      (max - min) / mean of "col"
//   profile_center / profile_fwhm
//                  half-maximum shape of "y" over the uniform axis "x"
inline double eval_metric(const CsvTable& t, const nlohmann::json& m) {
    const std::string op = m.at("op").get<std::string>();
    if (op == "max") return t.col(m.at("col"))[argext(t.col(m.at("col")), true)];
    if (op == "min") return t.col(m.at("col"))[argext(t.col(m.at("col")), false)];
    if (op == "arg_at_max") return t.col(m.at("col"))[argext(t.col(m.at("by")), true)];
    if (op == "arg_at_min") return t.col(m.at("col"))[argext(t.col(m.at("by")), false)];
    if (op == "cell") {
        const auto& c = t.col(m.at("col"));
        const auto row = m.at("row").get<std::size_t>();
        if (row >= c.size()) throw MissingArtifact("csv row " + std::to_string(row));
        return c[row];
    }
    if (op == "relspread") {
        const auto& c = t.col(m.at("col"));
        if (c.empty()) throw ConfigInvalid("metric column is empty");
        double lo = c[0], hi = c[0], mean = 0.0;
        for (double v : c) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            mean += v;
        }
        mean /= double(c.size());
        if (mean == 0.0) throw ConfigInvalid("relspread of a zero-mean column");
        return (hi - lo) / mean;
    }
    if (op == "profile_center" || op == "profile_fwhm") {
        const auto& x = t.col(m.at("x"));
        const auto& y = t.col(m.at("y"));
        if (x.size() != y.size() || x.size() < 3)
            throw ConfigInvalid("profile metric needs matched x/y columns");
        const FrequencyGrid axis(x.front(), x.back(), x.size());
        CVector f(Eigen::Index(y.size()));
        for (std::size_t l = 0; l < y.size(); ++l) f[Eigen::Index(l)] = y[l];
        const ProfileShape ps = profile_shape(axis, f);
        return op == "profile_center" ? ps.center_omega : ps.fwhm;
    }
    throw ConfigInvalid("unknown metric op '" + op + "'");
}

// Dotted lookup into the manifest config, e.g. "pulse.r_eff".
inline const nlohmann::json* json_path(const nlohmann::json& j, const std::string& path) {
    const nlohmann::json* cur = &j;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &cur->at(key);
        if (dot == std::string::npos) return cur;
        pos = dot + 1;
    }
    return nullptr;
}

inline bool when_matches(const nlohmann::json& manifest, const nlohmann::json& entry) {
    if (!entry.contains("when")) return true;
    for (auto it = entry.at("when").begin(); it != entry.at("when").end(); ++it) {
        const nlohmann::json* v = json_path(manifest, it.key());
        if (!v) return false;
        if (v->is_number() && it.value().is_number()) {
            const double a = v->get<double>(), b = it.value().get<double>();
            if (std::abs(a - b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)})) return false;
        } else if (*v != it.value()) {
            return false;
        }
    }
    return true;
}

} // namespace detail

struct CompareOutcome {
    nlohmann::json report;
    int checked = 0;
    int failed = 0;

    bool all_pass() const { return failed == 0; }
};

// Check a run bundle against a reference criteria table. Criteria whose
// scenario or "when" conditions do not match the bundle's manifest are
// reported as skipped; a criterion that matches but lacks its file is a
// MissingArtifact error, not a skip.
inline CompareOutcome compare_bundle(const std::string& bundle_dir,
                                     const std::string& reference_path) {
    std::ifstream ref_in(reference_path);
    if (!ref_in) throw ConfigInvalid("cannot open reference table " + reference_path);
    nlohmann::json ref;
    try {
        ref_in >> ref;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid("reference table is not valid JSON: " + std::string(e.what()));
    }
    if (!ref.is_array()) throw ConfigInvalid("reference table must be a JSON array");

    const std::string manifest_path = bundle_dir + "/manifest.json";
    std::ifstream man_in(manifest_path);
    if (!man_in) throw MissingArtifact(manifest_path);
    nlohmann::json manifest;
    try {
        man_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid("bundle manifest is not valid JSON: " + std::string(e.what()));
    }
    const std::string bundle_scenario =
        manifest.contains("scenario") ? manifest.at("scenario").get<std::string>() : "";

    CompareOutcome out;
    out.report["bundle"] = bundle_dir;
    out.report["reference"] = reference_path;
    out.report["results"] = nlohmann::json::array();

    for (const auto& entry : ref) {
        nlohmann::json res;
        res["criterion"] = entry.at("criterion");
        if (entry.at("scenario").get<std::string>() != bundle_scenario ||
            !detail::when_matches(manifest, entry)) {
            res["verdict"] = "skipped";
            out.report["results"].push_back(res);
            continue;
        }
        const std::string file = entry.at("file").get<std::string>();
        const CsvTable table = read_csv(bundle_dir + "/" + file);
        const double measured = detail::eval_metric(table, entry.at("metric"));
        const double expected = entry.at("expected").get<double>();
        double tol = 0.0;
        if (entry.contains("tol_rel"))
            tol = std::abs(expected) * entry.at("tol_rel").get<double>();
        else if (entry.contains("tol_abs"))
            tol = entry.at("tol_abs").get<double>();
        else
            throw ConfigInvalid("criterion " + res["criterion"].get<std::string>() +
                                ": needs tol_rel or tol_abs");
        const bool pass = std::abs(measured - expected) <= tol;
        res["file"] = file;
        res["measured"] = measured;
        res["expected"] = expected;
        res["tolerance"] = tol;
        res["verdict"] = pass ? "pass" : "fail";
        out.report["results"].push_back(res);
        ++out.checked;
        if (!pass) ++out.failed;
    }
    out.report["checked"] = out.checked;
    out.report["failed"] = out.failed;
    return out;
}

} // namespace trwf

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlgain/harness.hpp"

namespace mlgain {

// Writes content to path atomically: temp file in the same directory,
// flushed, then renamed over the target.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path dir = path.parent_path();
    if (dir.empty()) dir = ".";
    std::filesystem::create_directories(dir);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

// RFC-4180-style quoting: quote only when the field needs it.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::string num12(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

inline std::string num1(double x) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << x;
    return os.str();
}

}  // namespace detail

inline std::string render_summaries_csv(const std::vector<McSummary>& summaries) {
    if (summaries.empty()) throw std::invalid_argument("render_summaries_csv: empty input");
    std::ostringstream os;
    os << "scenario,config,cluster_size,model,replications,n_converged,"
          "tau_true,tau_hat_mean,tau_hat_sd,mc_se,pct_err\n";
    for (const auto& s : summaries) {
        os << to_string(s.scenario) << ',' << detail::csv_field(s.config_label) << ','
           << s.cluster_size << ',' << s.spec.label() << ',' << s.replications << ','
           << s.n_converged << ',' << detail::num12(s.tau_true) << ','
           << detail::num12(s.tau_hat_mean) << ',' << detail::num12(s.tau_hat_sd) << ','
           << detail::num12(s.mc_se) << ',' << detail::num12(s.pct_err) << '\n';
    }
    return os.str();
}

inline std::string render_summaries_json(const std::vector<McSummary>& summaries) {
    if (summaries.empty()) throw std::invalid_argument("render_summaries_json: empty input");
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : summaries) {
        rows.push_back({{"scenario", to_string(s.scenario)},
                        {"config", s.config_label},
                        {"cluster_size", s.cluster_size},
                        {"model", s.spec.label()},
                        {"replications", s.replications},
                        {"n_converged", s.n_converged},
                        {"tau_true", s.tau_true},
                        {"tau_hat_mean", s.tau_hat_mean},
                        {"tau_hat_sd", s.tau_hat_sd},
                        {"mc_se", s.mc_se},
                        {"pct_err", s.pct_err}});
    }
    return nlohmann::json{{"summaries", rows}}.dump(2) + "\n";
}

// Aligned text with one-decimal display, mirroring the published layout;
// full precision stays in the CSV rendering.
inline std::string render_summaries_text(const std::vector<McSummary>& summaries) {
    if (summaries.empty()) throw std::invalid_argument("render_summaries_text: empty input");
    std::ostringstream os;
    os << std::left << std::setw(10) << "scenario" << std::setw(8) << "config" << std::setw(6)
       << "n" << std::setw(24) << "model" << std::right << std::setw(10) << "tau_hat"
       << std::setw(10) << "%err" << std::setw(18) << "mc_se" << '\n';
    for (const auto& s : summaries) {
        os << std::left << std::setw(10) << to_string(s.scenario) << std::setw(8)
           << s.config_label << std::setw(6) << s.cluster_size << std::setw(24) << s.spec.label()
           << std::right << std::setw(10) << detail::num1(s.tau_hat_mean) << std::setw(10)
           << detail::num1(s.pct_err) << std::setw(18) << detail::num12(s.mc_se) << '\n';
    }
    return os.str();
}

inline std::vector<McSummary> flatten(const TableResult& table) {
    std::vector<McSummary> flat;
    for (const auto& row : table.rows)
        for (const auto& cell : row.cells) flat.push_back(cell);
    return flat;
}

inline std::string render_table_csv(const TableResult& table) {
    return render_summaries_csv(flatten(table));
}

// Paper-style grid: one row per configuration, (tau_hat, %err) per column.
inline std::string render_table_text(const TableResult& table) {
    std::ostringstream os;
    os << (table.table == TableId::Table3 ? "table 3" : "table 4") << "  scenario "
       << (table.scenario == Scenario::IndividualTreatment ? 1 : 2) << "  n="
       << table.cluster_size << "  K=" << table.replications << "  seed="
       << table.master_seed << "\n  cells: tau_hat / %err\n\n";
    os << std::left << std::setw(8) << "config";
    for (const auto& col : table.columns) os << std::right << std::setw(24) << col.label();
    os << '\n';
    for (const auto& row : table.rows) {
        os << std::left << std::setw(8) << to_string(row.config_id);
        for (const auto& cell : row.cells) {
            const std::string pair =
                detail::num1(cell.tau_hat_mean) + " / " + detail::num1(cell.pct_err);
            os << std::right << std::setw(24) << pair;
        }
        os << '\n';
    }
    return os.str();
}

inline std::string render_replication_log(const std::vector<ReplicationRecord>& records) {
    std::ostringstream os;
    os << "replication,seed,model,tau_hat,converged\n";
    for (const auto& r : records)
        os << r.replication << ',' << r.seed << ',' << r.spec.label() << ','
           << detail::num12(r.tau_hat) << ',' << (r.converged ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace mlgain

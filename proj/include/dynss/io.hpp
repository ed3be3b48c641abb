#pragma once

// CSV ingestion and emission, column standardization, flat key-value
// configuration with named profiles, and the resolved-run JSON record.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dynss/datagen.hpp"
#include "dynss/errors.hpp"
#include "dynss/sampler.hpp"
#include "dynss/version.hpp"

namespace dynss {

// ---------------------------------------------------------------------------
// CSV reading. RFC 4180: comma-separated, optional double-quoted fields with
// doubled quotes as escapes, CRLF or LF record breaks, quoted fields may span
// lines. Every record must have the header's width and every cell must be
// present; the numeric layer additionally requires each cell to parse as a
// double.

namespace detail {

inline std::string trim(std::string s) {
    auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

inline std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* c = t.c_str();
    char* end = nullptr;
    out = std::strtod(c, &end);
    return end == c + t.size();
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

} // namespace detail

struct CsvRecord {
    std::vector<std::string> fields;
    int line = 0; // physical line the record starts on, 1-based
};

inline std::vector<CsvRecord> read_csv_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("csv '" + path + "': cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<CsvRecord> records;
    CsvRecord cur;
    cur.line = 1;
    std::string field;
    bool quoted = false, any_field_content = false;
    int line = 1;

    auto end_field = [&] {
        cur.fields.push_back(field);
        field.clear();
        any_field_content = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(cur));
        cur = CsvRecord{};
        cur.line = line;
    };

    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
            any_field_content = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            ++line;
            if (cur.fields.empty() && field.empty() && !any_field_content) {
                cur.line = line; // blank line, not a record
            } else {
                end_record();
            }
        } else {
            field += c;
        }
        ++i;
    }
    if (quoted)
        throw DataError("csv '" + path + "' line " + std::to_string(cur.line)
                        + ": unterminated quoted field");
    if (!cur.fields.empty() || !field.empty() || any_field_content) end_record();
    if (records.empty()) throw DataError("csv '" + path + "': empty file");
    return records;
}

struct TabularData {
    std::vector<std::string> header;
    Eigen::MatrixXd values; // one row per data record, columns follow header

    int column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    }
};

inline TabularData load_table(const std::string& path) {
    const std::vector<CsvRecord> records = read_csv_records(path);
    TabularData tab;
    for (const std::string& h : records[0].fields) tab.header.push_back(detail::trim(h));
    for (size_t a = 0; a < tab.header.size(); ++a) {
        if (tab.header[a].empty())
            throw DataError("csv '" + path + "': empty header name in column "
                            + std::to_string(a + 1));
        for (size_t b = a + 1; b < tab.header.size(); ++b)
            if (tab.header[a] == tab.header[b])
                throw DataError("csv '" + path + "': duplicate column '" + tab.header[a] + "'");
    }

    const int q = static_cast<int>(tab.header.size());
    const int n = static_cast<int>(records.size()) - 1;
    if (n < 1) throw DataError("csv '" + path + "': no data rows");
    tab.values.resize(n, q);
    for (int r = 0; r < n; ++r) {
        const CsvRecord& rec = records[static_cast<size_t>(r) + 1];
        const std::string where =
            "csv '" + path + "' line " + std::to_string(rec.line) + ": row " + std::to_string(r + 1);
        if (static_cast<int>(rec.fields.size()) != q)
            throw DataError(where + " has " + std::to_string(rec.fields.size())
                            + " fields, expected " + std::to_string(q));
        for (int j = 0; j < q; ++j) {
            const std::string cell = detail::trim(rec.fields[static_cast<size_t>(j)]);
            if (cell.empty())
                throw DataError(where + ", column '" + tab.header[static_cast<size_t>(j)]
                                + "' is empty");
            double v;
            if (!detail::parse_double(cell, v))
                throw DataError(where + ", column '" + tab.header[static_cast<size_t>(j)]
                                + "': cannot parse '" + cell + "' as a number");
            tab.values(r, j) = v;
        }
    }
    return tab;
}

struct ColumnSelection {
    Dataset data;
    std::string response;
    std::vector<std::string> predictors;
};

// Empty predictor list selects every non-response column in header order.
inline ColumnSelection select_columns(const TabularData& tab, const std::string& response,
                                      std::vector<std::string> predictors = {}) {
    const int ry = tab.column(response);
    if (ry < 0) throw DataError("csv: missing column '" + response + "'");
    if (predictors.empty()) {
        for (const std::string& h : tab.header)
            if (h != response) predictors.push_back(h);
    }
    if (predictors.empty()) throw DataError("csv: no predictor columns left beside '" + response + "'");

    ColumnSelection sel;
    sel.response = response;
    sel.data.y = tab.values.col(ry);
    sel.data.X.resize(tab.values.rows(), static_cast<int>(predictors.size()));
    for (size_t j = 0; j < predictors.size(); ++j) {
        const int c = tab.column(predictors[j]);
        if (c < 0) throw DataError("csv: missing column '" + predictors[j] + "'");
        if (c == ry) throw DataError("csv: column '" + predictors[j] + "' is already the response");
        sel.data.X.col(static_cast<int>(j)) = tab.values.col(c);
    }
    sel.predictors = std::move(predictors);
    sel.data.generator = "csv";
    sel.data.validate();
    return sel;
}

inline Dataset load_csv(const std::string& path, const std::string& response,
                        std::vector<std::string> predictors = {}) {
    return select_columns(load_table(path), response, std::move(predictors)).data;
}

// ---------------------------------------------------------------------------
// Standardization of response and predictors to zero sample mean and unit
// sample variance (T-1 denominator). The record inverts the data transform
// exactly; coefficient paths map back through scale ratios only, so the
// intercept absorbed by the centering is not part of the coefficient table.

struct Standardization {
    double y_mean = 0.0, y_scale = 1.0;
    Eigen::VectorXd x_mean, x_scale;
};

inline std::pair<Dataset, Standardization> standardize(const Dataset& d,
                                                       const std::vector<std::string>& names = {},
                                                       const std::string& response_name = "response") {
    d.validate();
    const int T = static_cast<int>(d.X.rows()), q = static_cast<int>(d.X.cols());
    if (T < 2) throw DataError("standardize: need at least two rows");

    auto scale_of = [&](const Eigen::VectorXd& col, const std::string& name) {
        const double mu = col.mean();
        const double var = (col.array() - mu).square().sum() / (T - 1);
        if (!(var > 0.0) || !std::isfinite(var))
            throw DataError("standardize: column '" + name + "' has zero variance");
        return std::pair<double, double>(mu, std::sqrt(var));
    };

    Dataset out = d;
    out.truth.reset(); // centering shifts truth into an intercept the model lacks
    Standardization rec;
    std::tie(rec.y_mean, rec.y_scale) = scale_of(d.y, response_name);
    out.y = (d.y.array() - rec.y_mean) / rec.y_scale;
    rec.x_mean.resize(q);
    rec.x_scale.resize(q);
    for (int j = 0; j < q; ++j) {
        const std::string name =
            j < static_cast<int>(names.size()) ? names[static_cast<size_t>(j)]
                                               : "x" + std::to_string(j + 1);
        std::tie(rec.x_mean[j], rec.x_scale[j]) = scale_of(d.X.col(j), name);
        out.X.col(j) = (d.X.col(j).array() - rec.x_mean[j]) / rec.x_scale[j];
    }
    return {std::move(out), std::move(rec)};
}

inline Dataset unstandardize(const Dataset& d, const Standardization& rec) {
    if (d.X.cols() != rec.x_mean.size()) throw DataError("unstandardize: record width mismatch");
    Dataset out = d;
    out.y = (d.y.array() * rec.y_scale) + rec.y_mean;
    for (int j = 0; j < d.X.cols(); ++j)
        out.X.col(j) = (d.X.col(j).array() * rec.x_scale[j]) + rec.x_mean[j];
    return out;
}

// Coefficient paths and the observation variance on the original scale;
// regime, scale and AR summaries stay on the standardized model.
inline PosteriorSummary to_original_scale(PosteriorSummary s, const Standardization& rec) {
    if (s.beta_mean.cols() != rec.x_scale.size())
        throw DataError("to_original_scale: record width mismatch");
    for (int j = 0; j < s.beta_mean.cols(); ++j) {
        const double f = rec.y_scale / rec.x_scale[j];
        s.beta_mean.col(j) *= f;
        s.beta_median.col(j) *= f;
        s.beta_q025.col(j) *= f;
        s.beta_q975.col(j) *= f;
    }
    const double f2 = rec.y_scale * rec.y_scale;
    for (auto& [name, sum] : s.scalars) {
        if (name != "sigma2") continue;
        sum.mean *= f2;
        sum.median *= f2;
        sum.q025 *= f2;
        sum.q975 *= f2;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Inflation schema. Header names are compared after trimming, collapsing
// internal whitespace runs to single underscores and uppercasing.

inline std::string normalize_header(const std::string& s) {
    std::string t = detail::trim(s);
    std::string out;
    bool in_space = false;
    for (unsigned char c : t) {
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space) out += '_';
        in_space = false;
        out += static_cast<char>(std::toupper(c));
    }
    return out;
}

inline const std::vector<std::string>& inflation_predictor_names() {
    static const std::vector<std::string> names = {
        "GDP", "PCE", "GPI", "RGEGI", "IMGS", "NFP", "M2", "ENERGY", "FOOD", "MATERIALS",
        "OUTPUT_GAP", "GS10", "GS5", "GS3", "GS1", "PRIVATE_EMPLOYMENT", "PMI_MANU", "AHEPNSE",
        "DJIA", "M1", "ISM_SDI", "CONSUMER", "UNRATE", "TBILL3", "TBILL_SPREAD",
        "HOUSING_STARTS", "INF_EXP", "LAG1", "LAG2", "LAG3", "LAG4"};
    return names;
}

inline constexpr const char* kInflationResponse = "INFL";

// Exact column set: the response plus the 31 predictors, any order.
inline void validate_inflation_schema(const std::vector<std::string>& header) {
    std::set<std::string> seen;
    for (const std::string& h : header) {
        const std::string n = normalize_header(h);
        if (!seen.insert(n).second)
            throw DataError("inflation schema: duplicate column '" + n + "'");
    }
    std::set<std::string> expected(inflation_predictor_names().begin(),
                                   inflation_predictor_names().end());
    expected.insert(kInflationResponse);

    std::string missing, unexpected;
    for (const std::string& e : expected)
        if (!seen.count(e)) missing += (missing.empty() ? "" : ", ") + e;
    for (const std::string& s : seen)
        if (!expected.count(s)) unexpected += (unexpected.empty() ? "" : ", ") + s;
    if (!missing.empty() || !unexpected.empty()) {
        std::string msg = "inflation schema:";
        if (!missing.empty()) msg += " missing column(s) " + missing;
        if (!missing.empty() && !unexpected.empty()) msg += ";";
        if (!unexpected.empty()) msg += " unexpected column(s) " + unexpected;
        throw DataError(msg);
    }
}

// ---------------------------------------------------------------------------
// Run configuration. A flat key-value file (or the JSON record of a previous
// run) resolves onto defaults in order: named profile, file keys, CLI flags.

struct RunConfig {
    std::string command = "fit";
    std::string data_path;
    std::string truth_path;
    std::string out_dir = "out";
    std::string response;
    std::vector<std::string> predictors; // empty: all non-response columns
    std::string profile;
    McmcConfig mcmc;
    bool standardize_data = false;
    bool back_transform = false;

    void validate() const {
        mcmc.validate();
        if (out_dir.empty()) throw ConfigError("config: output directory not set");
    }
};

inline Hyperparameters example1_hypers() {
    return Hyperparameters{}; // the five-predictor benchmark settings are the defaults
}

inline Hyperparameters example2_hypers() {
    Hyperparameters hp;
    hp.nu = 25.0;
    hp.c_psi = 50.0;
    hp.C_psi = 1.5;
    hp.a_sigma = 5.0;
    hp.b_sigma = 1.5;
    return hp;
}

inline Hyperparameters inflation_hypers() {
    Hyperparameters hp;
    hp.r = 0.05;
    hp.nu = 50.0;
    hp.c_psi = 50.0;
    hp.C_psi = 0.05;
    hp.a_sigma = 31.0;
    hp.b_sigma = 4.22;
    return hp;
}

inline void apply_profile(RunConfig& cfg, const std::string& name) {
    if (name == "example-1") {
        cfg.mcmc.hp = example1_hypers();
        cfg.mcmc.n_iter = 10000;
        cfg.mcmc.n_burn = 5000;
        cfg.standardize_data = false;
    } else if (name == "example-2") {
        cfg.mcmc.hp = example2_hypers();
        cfg.mcmc.n_iter = 10000;
        cfg.mcmc.n_burn = 5000;
        cfg.standardize_data = false;
    } else if (name == "inflation") {
        cfg.mcmc.hp = inflation_hypers();
        cfg.mcmc.n_iter = 20000;
        cfg.mcmc.n_burn = 10000;
        cfg.standardize_data = true;
        cfg.response = kInflationResponse;
    } else {
        throw ConfigError("config: unknown profile '" + name + "'");
    }
    cfg.profile = name;
}

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline int parse_int(const std::string& key, const std::string& value) {
    int out;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw ConfigError("config: key '" + key + "': cannot parse '" + value + "' as an integer");
    return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw ConfigError("config: key '" + key + "': cannot parse '" + value + "' as an integer");
    return out;
}

inline double parse_config_double(const std::string& key, const std::string& value) {
    double out;
    if (!parse_double(value, out))
        throw ConfigError("config: key '" + key + "': cannot parse '" + value + "' as a number");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    throw ConfigError("config: key '" + key + "': cannot parse '" + value + "' as a boolean");
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace detail

inline PriorKind prior_from_name(const std::string& name) {
    if (name == "nmig") return PriorKind::Nmig;
    if (name == "ng") return PriorKind::NormalGamma;
    if (name == "laplace") return PriorKind::LaplaceMix;
    throw ConfigError("config: unknown prior '" + name + "' (expected nmig, ng or laplace)");
}

// Applies key-value pairs onto a config. "profile" is applied before every
// other key regardless of file position; unknown keys are errors except for
// the informational fields the run record carries.
inline void apply_config(RunConfig& cfg, const ConfigMap& kv) {
    using namespace detail;
    auto it = kv.find("profile");
    if (it != kv.end()) apply_profile(cfg, it->second);

    for (const auto& [key, value] : kv) {
        if (key == "profile" || key == "version" || key == "command" || key == "rows"
            || key == "cols" || key == "replications" || key == "variables")
            continue;
        Hyperparameters& hp = cfg.mcmc.hp;
        if (key == "prior") cfg.mcmc.kind = prior_from_name(value);
        else if (key == "iters") cfg.mcmc.n_iter = parse_int(key, value);
        else if (key == "burn") cfg.mcmc.n_burn = parse_int(key, value);
        else if (key == "thin") cfg.mcmc.thin = parse_int(key, value);
        else if (key == "seed") cfg.mcmc.seed = parse_u64(key, value);
        else if (key == "save_draws") cfg.mcmc.save_paths = parse_bool(key, value);
        else if (key == "standardize") cfg.standardize_data = parse_bool(key, value);
        else if (key == "back_transform") cfg.back_transform = parse_bool(key, value);
        else if (key == "out") cfg.out_dir = value;
        else if (key == "data") cfg.data_path = value;
        else if (key == "truth") cfg.truth_path = value;
        else if (key == "response") cfg.response = value;
        else if (key == "predictors") cfg.predictors = split_list(value);
        else if (key == "r") hp.r = parse_config_double(key, value);
        else if (key == "nu") hp.nu = parse_config_double(key, value);
        else if (key == "a_tau") hp.a_tau = parse_config_double(key, value);
        else if (key == "c_psi") hp.c_psi = parse_config_double(key, value);
        else if (key == "C_psi") hp.C_psi = parse_config_double(key, value);
        else if (key == "a_sigma") hp.a_sigma = parse_config_double(key, value);
        else if (key == "b_sigma") hp.b_sigma = parse_config_double(key, value);
        else if (key == "a_phi") hp.a_phi = parse_config_double(key, value);
        else if (key == "b_phi") hp.b_phi = parse_config_double(key, value);
        else if (key == "a_omega") hp.a_omega = parse_config_double(key, value);
        else if (key == "b_omega") hp.b_omega = parse_config_double(key, value);
        else if (key == "alpha") hp.alpha = parse_config_double(key, value);
        else if (key == "phi_repeats") cfg.mcmc.phi_repeats = parse_int(key, value);
        else if (key == "order") {
            if (value == "collapsed-first") cfg.mcmc.order = UpdateOrder::CollapsedFirst;
            else if (value == "states-first") cfg.mcmc.order = UpdateOrder::StatesFirst;
            else throw ConfigError("config: key 'order': unknown value '" + value + "'");
        } else if (key == "omega_update") {
            if (value == "exact-mh") cfg.mcmc.omega_update = OmegaUpdate::ExactMh;
            else if (value == "beta-conjugate") cfg.mcmc.omega_update = OmegaUpdate::BetaConjugate;
            else throw ConfigError("config: key 'omega_update': unknown value '" + value + "'");
        } else if (key == "weight_policy") {
            if (value == "stationary") cfg.mcmc.weight_policy = SlabWeightPolicy::Stationary;
            else if (value == "slab-persistence")
                cfg.mcmc.weight_policy = SlabWeightPolicy::SlabPersistence;
            else throw ConfigError("config: key 'weight_policy': unknown value '" + value + "'");
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }
}

inline ConfigMap parse_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    ConfigMap kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config '" + path + "' line " + std::to_string(lineno)
                              + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config '" + path + "' line " + std::to_string(lineno)
                              + ": empty key");
        if (kv.count(key))
            throw ConfigError("config '" + path + "' line " + std::to_string(lineno)
                              + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

inline ConfigMap parse_json_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config '" + path + "': expected a JSON object");
    ConfigMap kv;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string()) kv[key] = value.get<std::string>();
        else if (value.is_boolean()) kv[key] = value.get<bool>() ? "true" : "false";
        else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) {
                if (!item.is_string())
                    throw ConfigError("config '" + path + "': key '" + key
                                      + "': expected an array of strings");
                joined += (joined.empty() ? "" : ",") + item.get<std::string>();
            }
            kv[key] = joined;
        } else if (value.is_number()) {
            kv[key] = value.dump(); // shortest representation, round-trips exactly
        } else {
            throw ConfigError("config '" + path + "': key '" + key + "': unsupported value type");
        }
    }
    return kv;
}

inline ConfigMap load_config_file(const std::string& path) {
    const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    return json ? parse_json_config(path) : parse_flat_config(path);
}

// ---------------------------------------------------------------------------
// Emission. Numbers are written in shortest round-trip form, so re-running an
// identical configuration reproduces the files byte for byte.

inline nlohmann::json config_to_json(const RunConfig& cfg, int rows, int cols) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["command"] = cfg.command;
    if (!cfg.profile.empty()) j["profile"] = cfg.profile;
    if (!cfg.data_path.empty()) j["data"] = cfg.data_path;
    if (!cfg.truth_path.empty()) j["truth"] = cfg.truth_path;
    j["out"] = cfg.out_dir;
    if (!cfg.response.empty()) j["response"] = cfg.response;
    if (!cfg.predictors.empty()) j["predictors"] = cfg.predictors;
    j["prior"] = prior_name(cfg.mcmc.kind);
    j["iters"] = cfg.mcmc.n_iter;
    j["burn"] = cfg.mcmc.n_burn;
    j["thin"] = cfg.mcmc.thin;
    j["seed"] = cfg.mcmc.seed;
    j["save_draws"] = cfg.mcmc.save_paths;
    j["standardize"] = cfg.standardize_data;
    j["back_transform"] = cfg.back_transform;
    const Hyperparameters& hp = cfg.mcmc.hp;
    j["r"] = hp.r;
    j["nu"] = hp.nu;
    j["a_tau"] = hp.a_tau;
    j["c_psi"] = hp.c_psi;
    j["C_psi"] = hp.C_psi;
    j["a_sigma"] = hp.a_sigma;
    j["b_sigma"] = hp.b_sigma;
    j["a_phi"] = hp.a_phi;
    j["b_phi"] = hp.b_phi;
    j["a_omega"] = hp.a_omega;
    j["b_omega"] = hp.b_omega;
    j["alpha"] = hp.alpha;
    j["phi_repeats"] = cfg.mcmc.phi_repeats;
    j["order"] = cfg.mcmc.order == UpdateOrder::CollapsedFirst ? "collapsed-first" : "states-first";
    j["omega_update"] =
        cfg.mcmc.omega_update == OmegaUpdate::ExactMh ? "exact-mh" : "beta-conjugate";
    j["weight_policy"] = cfg.mcmc.weight_policy == SlabWeightPolicy::Stationary
                             ? "stationary"
                             : "slab-persistence";
    if (rows > 0) j["rows"] = rows;
    if (cols > 0) j["cols"] = cols;
    return j;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("emit: cannot write '" + p.string() + "'");
    return out;
}

} // namespace detail

inline void write_summary_csv(const std::filesystem::path& path, const PosteriorSummary& s) {
    std::ofstream out = detail::open_out(path);
    out << "predictor,time,mean,median,q2.5,q97.5,inclusion\n";
    for (int j = 0; j < s.beta_mean.cols(); ++j)
        for (int t = 0; t < s.beta_mean.rows(); ++t)
            out << (j + 1) << ',' << (t + 1) << ',' << detail::fmt(s.beta_mean(t, j)) << ','
                << detail::fmt(s.beta_median(t, j)) << ',' << detail::fmt(s.beta_q025(t, j)) << ','
                << detail::fmt(s.beta_q975(t, j)) << ',' << detail::fmt(s.inclusion(t, j)) << '\n';
}

inline void write_scalars_csv(const std::filesystem::path& path, const PosteriorSummary& s) {
    std::ofstream out = detail::open_out(path);
    out << "name,mean,median,q2.5,q97.5\n";
    for (const auto& [name, sum] : s.scalars)
        out << detail::csv_escape(name) << ',' << detail::fmt(sum.mean) << ','
            << detail::fmt(sum.median) << ',' << detail::fmt(sum.q025) << ','
            << detail::fmt(sum.q975) << '\n';
    for (int j = 0; j < s.mh_acceptance.size(); ++j) {
        const std::string rate = detail::fmt(s.mh_acceptance[j]);
        out << "accept_phi_" << (j + 1) << ',' << rate << ',' << rate << ',' << rate << ','
            << rate << '\n';
    }
}

inline void write_rmse_csv(const std::filesystem::path& path, const PosteriorSummary& s,
                           const Eigen::MatrixXd& truth) {
    std::ofstream out = detail::open_out(path);
    out << "rmse_mean,rmse_median\n";
    out << detail::fmt(compute_rmse(s.beta_mean, truth)) << ','
        << detail::fmt(compute_rmse(s.beta_median, truth)) << '\n';
}

inline void write_draw_shards(const std::filesystem::path& dir, const ChainResult& res) {
    {
        std::ofstream out = detail::open_out(dir / "draws_scalars.csv");
        for (size_t k = 0; k < res.scalar_names.size(); ++k)
            out << (k ? "," : "") << res.scalar_names[k];
        out << '\n';
        for (int d = 0; d < res.scalar_draws.rows(); ++d) {
            for (int k = 0; k < res.scalar_draws.cols(); ++k)
                out << (k ? "," : "") << detail::fmt(res.scalar_draws(d, k));
            out << '\n';
        }
    }
    if (res.beta_draws.empty()) return;
    std::ofstream out = detail::open_out(dir / "draws_states.csv");
    out << "draw,time";
    const int q = static_cast<int>(res.beta_draws[0].cols());
    for (int j = 0; j < q; ++j) out << ",beta_" << (j + 1);
    out << '\n';
    for (size_t d = 0; d < res.beta_draws.size(); ++d) {
        const Eigen::MatrixXd& b = res.beta_draws[d];
        for (int t = 0; t < b.rows(); ++t) {
            out << (d + 1) << ',' << (t + 1);
            for (int j = 0; j < q; ++j) out << ',' << detail::fmt(b(t, j));
            out << '\n';
        }
    }
}

// Writes summary.csv, scalars.csv, run.json, rmse.csv when the truth is
// known, the back-transformed coefficient table when requested, and the
// per-block draw shards when draws were kept.
inline void emit_results(const ChainResult& res, const RunConfig& cfg,
                         const Eigen::MatrixXd* truth = nullptr,
                         const Standardization* rec = nullptr) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("emit: cannot create directory '" + dir.string() + "'");

    write_summary_csv(dir / "summary.csv", res.summary);
    write_scalars_csv(dir / "scalars.csv", res.summary);
    if (truth) write_rmse_csv(dir / "rmse.csv", res.summary, *truth);
    if (cfg.back_transform) {
        if (!rec) throw ConfigError("emit: back_transform requires a standardized fit");
        write_summary_csv(dir / "summary_original.csv", to_original_scale(res.summary, *rec));
    }
    {
        std::ofstream out = detail::open_out(dir / "run.json");
        out << config_to_json(cfg, static_cast<int>(res.summary.beta_mean.rows()),
                              static_cast<int>(res.summary.beta_mean.cols()))
                   .dump(2)
            << '\n';
    }
    if (cfg.mcmc.save_paths) write_draw_shards(dir, res);
}

// Datasets round-trip through the numeric loader: response column first.
inline void write_dataset_csv(const std::filesystem::path& path, const Dataset& d,
                              const std::string& response = "y",
                              const std::vector<std::string>& predictors = {}) {
    std::ofstream out = detail::open_out(path);
    out << detail::csv_escape(response);
    for (int j = 0; j < d.X.cols(); ++j) {
        const std::string name = j < static_cast<int>(predictors.size())
                                     ? predictors[static_cast<size_t>(j)]
                                     : "x" + std::to_string(j + 1);
        out << ',' << detail::csv_escape(name);
    }
    out << '\n';
    for (int t = 0; t < d.X.rows(); ++t) {
        out << detail::fmt(d.y[t]);
        for (int j = 0; j < d.X.cols(); ++j) out << ',' << detail::fmt(d.X(t, j));
        out << '\n';
    }
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                             const std::string& stem) {
    std::ofstream out = detail::open_out(path);
    for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << stem << "_" << (j + 1);
    out << '\n';
    for (int t = 0; t < m.rows(); ++t) {
        for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::fmt(m(t, j));
        out << '\n';
    }
}

} // namespace dynss

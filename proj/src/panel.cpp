#include "fat/panel.hpp"

#include "fat/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace fat {

double parse_double(const std::string& cell, const std::string& where) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
        throw std::invalid_argument("non-numeric or non-finite cell '" + cell + "' at " + where);
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        if (line.empty() && in.peek() == EOF) break;
        if (first) {
            table.header = split_csv_line(line);
            first = false;
        } else {
            table.rows.push_back(split_csv_line(line));
        }
    }
    if (first) throw std::invalid_argument("empty CSV file: " + path.string());
    return table;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

PanelData PanelData::period_window(Eigen::Index first, Eigen::Index count) const {
    PanelData w;
    w.responses = responses.middleCols(first, count);
    w.covariates = covariates.middleRows(first, count);
    w.unit_ids = unit_ids;
    w.period_ids.assign(period_ids.begin() + first, period_ids.begin() + first + count);
    w.covariate_ids = covariate_ids;
    return w;
}

void validate_panel(const PanelData& panel) {
    const Eigen::Index n = panel.n_units();
    const Eigen::Index t = panel.n_periods();
    const Eigen::Index p = panel.n_covariates();
    if (n < 1) throw std::invalid_argument("panel must contain at least one unit");
    if (t < p + 2) {
        std::ostringstream msg;
        msg << "need T >= p+2 periods (got T=" << t << ", p=" << p << ")";
        throw std::invalid_argument(msg.str());
    }
    if (panel.covariates.rows() != t) {
        throw std::invalid_argument("covariate rows do not match response periods");
    }
    if (static_cast<Eigen::Index>(panel.unit_ids.size()) != n ||
        static_cast<Eigen::Index>(panel.period_ids.size()) != t) {
        throw std::invalid_argument("id sequences do not match panel dimensions");
    }
    if (!panel.responses.allFinite() || !panel.covariates.allFinite()) {
        throw std::invalid_argument("panel contains missing or non-finite entries");
    }
}

namespace {

Eigen::MatrixXd parse_numeric_rows(const CsvTable& table, std::size_t n_cols,
                                   const std::string& label, std::size_t first_col = 0) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(table.rows.size()),
                        static_cast<Eigen::Index>(n_cols));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != first_col + n_cols) {
            std::ostringstream msg;
            msg << label << ": row " << (i + 2) << " has " << row.size()
                << " cells, expected " << (first_col + n_cols);
            throw std::invalid_argument(msg.str());
        }
        for (std::size_t j = 0; j < n_cols; ++j) {
            std::ostringstream where;
            where << label << " row " << (i + 2) << " column " << (first_col + j + 1);
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_double(row[first_col + j], where.str());
        }
    }
    return out;
}

}  // namespace

PanelData load_panel(const std::filesystem::path& responses_path,
                     const std::filesystem::path& covariates_path,
                     bool units_as_rows) {
    PanelData panel;

    const CsvTable resp = read_csv(responses_path);
    if (units_as_rows) {
        // header: "unit", period ids...; one row per unit, id in column 1.
        if (resp.header.empty()) {
            throw std::invalid_argument("responses: missing header");
        }
        panel.period_ids.assign(resp.header.begin() + 1, resp.header.end());
        for (const auto& row : resp.rows) {
            if (row.empty()) throw std::invalid_argument("responses: empty row");
            panel.unit_ids.push_back(row[0]);
        }
        panel.responses = parse_numeric_rows(resp, panel.period_ids.size(), "responses", 1);
    } else {
        // header: unit ids; one row per period.
        panel.unit_ids = resp.header;
        panel.responses =
            parse_numeric_rows(resp, panel.unit_ids.size(), "responses").transpose();
        panel.period_ids.resize(panel.responses.cols());
        for (Eigen::Index t = 0; t < panel.responses.cols(); ++t) {
            panel.period_ids[t] = std::to_string(t + 1);
        }
    }

    if (covariates_path.empty()) {
        panel.covariates.resize(panel.responses.cols(), 0);
    } else {
        const CsvTable cov = read_csv(covariates_path);
        panel.covariate_ids = cov.header;
        panel.covariates = parse_numeric_rows(cov, cov.header.size(), "covariates");
        if (panel.covariates.rows() != panel.responses.cols()) {
            std::ostringstream msg;
            msg << "dimension mismatch: responses have " << panel.responses.cols()
                << " periods but covariates have " << panel.covariates.rows() << " rows";
            throw std::invalid_argument(msg.str());
        }
    }

    validate_panel(panel);
    return panel;
}

void write_panel(const PanelData& panel,
                 const std::filesystem::path& responses_path,
                 const std::filesystem::path& covariates_path) {
    std::string out;
    for (std::size_t i = 0; i < panel.unit_ids.size(); ++i) {
        if (i) out += ',';
        out += panel.unit_ids[i];
    }
    out += '\n';
    for (Eigen::Index t = 0; t < panel.n_periods(); ++t) {
        for (Eigen::Index i = 0; i < panel.n_units(); ++i) {
            if (i) out += ',';
            out += format_double(panel.responses(i, t));
        }
        out += '\n';
    }
    write_text_file(responses_path, out);

    std::string cov;
    for (Eigen::Index j = 0; j < panel.n_covariates(); ++j) {
        if (j) cov += ',';
        cov += (j < static_cast<Eigen::Index>(panel.covariate_ids.size()))
                   ? panel.covariate_ids[j]
                   : "f" + std::to_string(j + 1);
    }
    cov += '\n';
    for (Eigen::Index t = 0; t < panel.covariates.rows(); ++t) {
        for (Eigen::Index j = 0; j < panel.n_covariates(); ++j) {
            if (j) cov += ',';
            cov += format_double(panel.covariates(t, j));
        }
        cov += '\n';
    }
    write_text_file(covariates_path, cov);
}

PanelData normalize_covariates(PanelData panel) {
    for (Eigen::Index j = 0; j < panel.covariates.cols(); ++j) {
        panel.covariates.col(j).array() -= panel.covariates.col(j).mean();
    }
    return panel;
}

PanelData standardize_responses(PanelData panel) {
    const double t = static_cast<double>(panel.n_periods());
    for (Eigen::Index i = 0; i < panel.n_units(); ++i) {
        const double m = panel.responses.row(i).mean();
        const double var = (panel.responses.row(i).array() - m).square().sum() / t;
        if (var <= 0.0) {
            throw std::invalid_argument("cannot standardize constant responses of unit '" +
                                        panel.unit_ids[i] + "'");
        }
        panel.responses.row(i) /= std::sqrt(var);
    }
    return panel;
}

}  // namespace fat

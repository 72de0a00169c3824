#include "mrcp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "mrcp/errors.hpp"
#include "mrcp/rng.hpp"

namespace mrcp {

Eigen::Index Dataset::observed_count() const {
    return static_cast<Eigen::Index>(std::count(r.begin(), r.end(), std::uint8_t{1}));
}

void Dataset::validate() const {
    if (n() < 1 || p() < 1) throw argument_error("Dataset: need n >= 1 and p >= 1");
    if (y.size() != n() || static_cast<Eigen::Index>(r.size()) != n())
        throw argument_error("Dataset: y/r length mismatch");
    if (!x.allFinite()) throw argument_error("Dataset: covariates must be fully observed");
    for (Eigen::Index i = 0; i < n(); ++i) {
        const bool defined = std::isfinite(y[i]);
        if (r[i] == 1 && !defined)
            throw consistency_error("Dataset: y missing on observed row " + std::to_string(i));
        if (r[i] == 0 && defined)
            throw consistency_error("Dataset: y defined on missing row " + std::to_string(i));
    }
}

Dataset Dataset::make(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::uint8_t> r,
                      std::vector<std::string> names, std::string y_name) {
    Dataset ds;
    ds.x = std::move(x);
    ds.y = std::move(y);
    ds.r = std::move(r);
    if (names.empty())
        for (Eigen::Index j = 0; j < ds.p(); ++j) names.push_back("x" + std::to_string(j + 1));
    ds.covariate_names = std::move(names);
    ds.y_name = std::move(y_name);
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        if (ds.r[i] == 0) ds.y[i] = std::numeric_limits<double>::quiet_NaN();
    ds.validate();
    return ds;
}

void ModelSpec::validate(const Dataset& ds) const {
    std::set<Eigen::Index> seen;
    for (auto c : columns) {
        if (c < 0 || c >= ds.p())
            throw argument_error("ModelSpec: column index " + std::to_string(c) + " out of range");
        if (!seen.insert(c).second)
            throw argument_error("ModelSpec: duplicate column " + std::to_string(c));
    }
}

Eigen::MatrixXd design_matrix(const Dataset& ds, const IndexList& idx, const ModelSpec& spec) {
    spec.validate(ds);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(idx.size()),
                      static_cast<Eigen::Index>(spec.columns.size()) + 1);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        z(i, 0) = 1.0;
        for (std::size_t j = 0; j < spec.columns.size(); ++j)
            z(i, static_cast<Eigen::Index>(j) + 1) = ds.x(idx[i], spec.columns[j]);
    }
    return z;
}

Eigen::VectorXd design_row(const Dataset& ds, Eigen::Index row, const ModelSpec& spec) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(spec.columns.size()) + 1);
    z[0] = 1.0;
    for (std::size_t j = 0; j < spec.columns.size(); ++j)
        z[static_cast<Eigen::Index>(j) + 1] = ds.x(row, spec.columns[j]);
    return z;
}

ModelSpec full_spec(const Dataset& ds, ModelKind kind) {
    ModelSpec spec;
    spec.kind = kind;
    for (Eigen::Index j = 0; j < ds.p(); ++j) spec.columns.push_back(j);
    return spec;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
    const std::string t = trim(cell);
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw parse_error("row " + std::to_string(row) + ", column " + col +
                          ": not a number: '" + cell + "'");
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& y_column,
                 const std::string& r_column) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": missing header row");
    auto header = split_line(line);
    for (auto& h : header) h = trim(h);

    std::ptrdiff_t y_col = -1, r_col = -1;
    std::vector<std::size_t> x_cols;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == y_column)
            y_col = static_cast<std::ptrdiff_t>(j);
        else if (!r_column.empty() && header[j] == r_column)
            r_col = static_cast<std::ptrdiff_t>(j);
        else {
            x_cols.push_back(j);
            names.push_back(header[j]);
        }
    }
    if (y_col < 0) throw parse_error(path + ": no column named '" + y_column + "'");
    if (!r_column.empty() && r_col < 0)
        throw parse_error(path + ": no column named '" + r_column + "'");
    if (x_cols.empty()) throw parse_error(path + ": no covariate columns");

    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    std::vector<std::uint8_t> rs;
    std::size_t row_no = 1;  // header was row 1
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw parse_error("row " + std::to_string(row_no) + ": expected " +
                              std::to_string(header.size()) + " cells, got " +
                              std::to_string(cells.size()));
        std::vector<double> xrow;
        xrow.reserve(x_cols.size());
        for (std::size_t j : x_cols) xrow.push_back(parse_number(cells[j], row_no, header[j]));

        const std::string y_cell = trim(cells[static_cast<std::size_t>(y_col)]);
        const bool y_present = !y_cell.empty();
        std::uint8_t robs;
        if (r_col >= 0) {
            double rv = parse_number(cells[static_cast<std::size_t>(r_col)], row_no, r_column);
            if (rv != 0.0 && rv != 1.0)
                throw parse_error("row " + std::to_string(row_no) + ": r must be 0 or 1");
            robs = static_cast<std::uint8_t>(rv);
            if (robs == 1 && !y_present)
                throw consistency_error("row " + std::to_string(row_no) +
                                        ": r=1 but '" + y_column + "' is missing");
        } else {
            robs = y_present ? 1 : 0;
        }
        rows.push_back(std::move(xrow));
        ys.push_back(robs == 1 ? parse_number(cells[static_cast<std::size_t>(y_col)], row_no,
                                              y_column)
                               : std::numeric_limits<double>::quiet_NaN());
        rs.push_back(robs);
    }
    if (rows.empty()) throw parse_error(path + ": no data rows");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(x_cols.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < x_cols.size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        y[static_cast<Eigen::Index>(i)] = ys[i];
    }
    return Dataset::make(std::move(x), std::move(y), std::move(rs), std::move(names), y_column);
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write " + path);
    char buf[40];
    for (Eigen::Index j = 0; j < ds.p(); ++j) out << ds.covariate_names[j] << ',';
    out << ds.y_name << ",r\n";
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.p(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.x(i, j));
            out << buf << ',';
        }
        if (ds.r[i] == 1) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.y[i]);
            out << buf;
        }
        out << ',' << int(ds.r[i]) << '\n';
    }
}

SplitIndices split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw argument_error("split: fraction must lie in (0,1)");
    const auto n = static_cast<std::size_t>(ds.n());
    IndexList perm(n);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i)  // Fisher-Yates
        std::swap(perm[i], perm[rng.below(i + 1)]);
    const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw argument_error("split: both parts must be nonempty");
    SplitIndices s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.calib.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return s;
}

}  // namespace mrcp

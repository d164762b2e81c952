#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bell.hpp"
#include "error.hpp"
#include "homogenization.hpp"
#include "sweep.hpp"
#include "units.hpp"

namespace flexohom {

/// Lossless decimal form of a double (17 significant digits).
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

inline void check_written(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

inline const std::vector<std::string>& generalized_strain_names() {
    static const std::vector<std::string> n = {"eps11", "eps22", "eps12", "g111", "g112", "g122",
                                               "g211",  "g212",  "g222",  "-E1",  "-E2"};
    return n;
}

inline const std::vector<std::string>& generalized_stress_names() {
    static const std::vector<std::string> n = {"sigma11", "sigma22", "sigma12*", "tau111", "tau112*", "tau122",
                                               "tau211",  "tau212*", "tau222",   "D1",     "D2"};
    return n;
}

/// 11 x 11 generalized tangent in internal units (um, GPa, V). Rows are the
/// work-conjugate stress components: starred entries are conjugate to a
/// strain component that stands for two equal tensor entries (2 sigma12 etc.).
inline void write_effective(const EffectiveTangents& t, const std::string& path) {
    auto out = open_output(path);
    out << "row";
    for (const auto& n : generalized_strain_names()) out << ',' << n;
    out << '\n';
    for (int i = 0; i < 11; ++i) {
        out << generalized_stress_names()[i];
        for (int j = 0; j < 11; ++j) out << ',' << fmt17(t.Cbig(i, j));
        out << '\n';
    }
    check_written(out, path);
}

/// Reads the matrix back from write_effective output.
inline EffectiveTangents read_effective(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    EffectiveTangents t;
    for (int i = 0; i < 11; ++i) {
        if (!std::getline(in, line)) throw ParseError(path + ": missing matrix row", i + 2);
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        for (int j = 0; j < 11; ++j) {
            if (!std::getline(ss, cell, ',')) throw ParseError(path + ": missing matrix entry", i + 2);
            t.Cbig(i, j) = std::stod(cell);
        }
    }
    return t;
}

/// Named coefficients (customary units) as one "label,value[,normalized]" row per coefficient.
inline void write_coefficients(const Eigen::VectorXd& values, const Eigen::VectorXd* normalized, const std::string& path) {
    auto out = open_output(path);
    out << "coefficient,value" << (normalized ? ",normalized" : "") << '\n';
    for (std::size_t i = 0; i < coefficient_labels().size(); ++i) {
        out << coefficient_labels()[i] << ',' << fmt17(values[i]);
        if (normalized) out << ',' << fmt17((*normalized)[i]);
        out << '\n';
    }
    check_written(out, path);
}

inline std::string sweep_header(const SweepTable& t) {
    std::string h = to_string(t.variable) + ",status,elements";
    for (const auto& l : coefficient_labels()) h += ',' + l;
    if (t.normalized)
        for (const auto& l : coefficient_labels()) h += ',' + l + "/ref";
    h += ",symmetry_defect,message";
    return h;
}

inline std::string sweep_row(const SweepTable& t, const SweepRow& r) {
    std::string s = fmt17(r.value) + (r.ok ? ",ok," : ",failed,") + std::to_string(r.elements);
    const std::size_t n = coefficient_labels().size();
    for (std::size_t i = 0; i < n; ++i) s += ',' + (r.ok ? fmt17(r.coefficients[i]) : std::string());
    if (t.normalized)
        for (std::size_t i = 0; i < n; ++i) s += ',' + (r.ok ? fmt17(r.normalized[i]) : std::string());
    s += ',' + (r.ok ? fmt17(r.symmetryDefect) : std::string());
    std::string msg = r.error;
    for (char& c : msg)
        if (c == ',' || c == '\n' || c == '"') c = ' ';
    s += ',' + msg;
    return s;
}

/// Sweep table with a fixed header; rows in the order of the sweep values.
inline void write_sweep(const SweepTable& t, const std::string& path) {
    auto out = open_output(path);
    out << sweep_header(t) << '\n';
    for (const auto& r : t.rows) out << sweep_row(t, r) << '\n';
    check_written(out, path);
}

/// Field output: 3 points per triangle (its vertices, in element order).
struct FieldZone {
    std::string title;
    std::vector<FieldPoint> points;
};

inline const std::vector<std::string>& field_columns() {
    static const std::vector<std::string> c = {
        "x1",     "x2",     "u1",     "u2",     "phi",    "eps11",  "eps22",  "eps12",   "g111",    "g112",
        "g122",   "g211",   "g212",   "g222",   "E1",     "E2",     "sigma11", "sigma22", "sigma12", "tau111",
        "tau112", "tau122", "tau211", "tau212", "tau222", "D1",     "D2",      "P1",      "P2",      "H"};
    return c;
}

/// Physical tensor components of a field point, in field_columns() order.
/// The shear-type entries of sigma and tau are halved from their work-conjugate values.
inline std::vector<double> field_row(const FieldPoint& f) {
    const Vec2 E = f.E();
    return {f.x.x(),    f.x.y(),    f.u.x(),    f.u.y(),    f.phi,          f.state.eps[0], f.state.eps[1], f.state.eps[2],
            f.state.g[0], f.state.g[1], f.state.g[2], f.state.g[3], f.state.g[4], f.state.g[5], E.x(),          E.y(),
            f.sigma[0], f.sigma[1], 0.5 * f.sigma[2], f.tau[0], 0.5 * f.tau[1], f.tau[2],   f.tau[3],       0.5 * f.tau[4],
            f.tau[5],   f.D.x(),    f.D.y(),    f.P.x(),    f.P.y(),        f.H};
}

inline void write_tecplot(const std::vector<FieldZone>& zones, const std::string& path, const std::string& title = "flexohom") {
    auto out = open_output(path);
    out << "TITLE = \"" << title << "\"\n";
    out << "VARIABLES =";
    for (const auto& c : field_columns()) out << " \"" << c << '"';
    out << '\n';
    for (const auto& z : zones) {
        if (z.points.size() % 3 != 0) throw Error("field zone '" + z.title + "' does not hold whole triangles");
        const std::size_t ne = z.points.size() / 3;
        out << "ZONE T=\"" << z.title << "\", N=" << z.points.size() << ", E=" << ne << ", F=FEPOINT, ET=TRIANGLE\n";
        for (const auto& p : z.points) {
            const auto row = field_row(p);
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << fmt17(row[i]);
            out << '\n';
        }
        for (std::size_t e = 0; e < ne; ++e) out << 3 * e + 1 << ' ' << 3 * e + 2 << ' ' << 3 * e + 3 << '\n';
    }
    check_written(out, path);
}

/// CSV mirror of one zone with the same columns as the Tecplot file.
inline void write_fields_csv(const FieldZone& zone, const std::string& path) {
    auto out = open_output(path);
    const auto& cols = field_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& p : zone.points) {
        const auto row = field_row(p);
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt17(row[i]);
        out << '\n';
    }
    check_written(out, path);
}

inline Eigen::MatrixXd read_fields_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header", 1);
    std::vector<std::vector<double>> rows;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
        if (r.size() != field_columns().size()) throw ParseError(path + ": wrong number of columns", lineNo);
        rows.push_back(std::move(r));
    }
    Eigen::MatrixXd M(rows.size(), field_columns().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    return M;
}

}  // namespace flexohom

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "nmfpack/errors.hpp"
#include "nmfpack/exact_nmf.hpp"
#include "nmfpack/instance_gen.hpp"
#include "nmfpack/matrix.hpp"

namespace nmfpack {

// Dense CSV: one row per line, comma separated, optional leading comment
// lines starting with '#'. NaN and infinities are rejected.
inline Matrix parse_matrix_csv_text(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty() || trimmed.front() == '#') continue;

        std::vector<double> row;
        std::size_t col_no = 0;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            ++col_no;
            const std::size_t comma = line.find(',', pos);
            const std::string field =
                line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            const char* begin = field.c_str();
            char* end = nullptr;
            const double value = std::strtod(begin, &end);
            // whole field must be consumed, modulo surrounding whitespace
            const char* tail = end;
            while (tail && *tail != '\0' && (*tail == ' ' || *tail == '\t')) ++tail;
            if (end == begin || (tail && *tail != '\0'))
                throw parse_error(line_no, col_no, "expected a real number, got '" + field + "'");
            if (!std::isfinite(value)) throw non_finite_error(line_no);
            row.push_back(value);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) throw ragged_rows_error(line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error(line_no, 1, "no data rows");
    return Matrix::from_rows(rows);
}

inline Matrix parse_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nmf_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_matrix_csv_text(buf.str());
}

inline std::string matrix_to_csv(const Matrix& m) {
    std::string out;
    char field[64];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(field, sizeof field, "%.17g", m(i, j));
            out += field;
            out += (j + 1 < m.cols()) ? "," : "\n";
        }
    }
    return out;
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw nmf_error("cannot write '" + path + "'");
    out << matrix_to_csv(m);
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row(i));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

inline nlohmann::json to_json(const PlantedInstance& inst) {
    return {{"m", matrix_to_json(inst.m)},
            {"a_true", matrix_to_json(inst.a_true)},
            {"w_true", matrix_to_json(inst.w_true)},
            {"r", inst.r},
            {"alpha", inst.alpha},
            {"noise_eps", inst.noise_eps},
            {"seed", inst.seed}};
}

inline nlohmann::json to_json(const Gadget2D& g) {
    auto points = [](const std::vector<PlanePoint>& ps) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : ps) arr.push_back({p[0], p[1]});
        return arr;
    };
    return {{"n_values", g.n_values},
            {"values", g.values},
            {"eps", g.eps},
            {"hexagon", points(g.hexagon)},
            {"a_points", points(g.a_points)},
            {"c_points", points(g.c_points)},
            {"e_points", points(g.e_points)},
            {"intersection_vertices", points(g.intersection_vertices)},
            {"center", {g.center[0], g.center[1]}},
            {"rigidity_regime", g.rigidity_regime}};
}

inline nlohmann::json to_json(const IntermediateSimplexInstance& inst) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : inst.points) points.push_back(p);
    return {{"dim", inst.dim},
            {"d", inst.d},
            {"h_mat", matrix_to_json(inst.h_mat)},
            {"b_vec", inst.b_vec},
            {"points", points},
            {"source_values", inst.source_values},
            {"eps_g", inst.eps_g},
            {"z_shift", inst.z_shift},
            {"constraints_full_rank", inst.constraints_full_rank},
            {"gadget", to_json(inst.gadget)},
            // the soundness regime needs eps below N^(-C d) for an unspecified
            // constant; recorded as metadata only
            {"soundness_constant_known", false}};
}

// Explicit polynomial-system description: variables are the transform
// entries, linear rows are the nonnegativity constraints, and the bilinear
// equations reproduce each entry of m.
inline nlohmann::json poly_system_to_json(const PolySystem& sys, const Matrix& m) {
    nlohmann::json vars = nlohmann::json::array();
    for (std::size_t p = 0; p < sys.num_col_parts; ++p)
        for (std::size_t row = 0; row < sys.r; ++row)
            for (std::size_t col = 0; col < sys.span_dim; ++col)
                vars.push_back({{"name", "T" + std::to_string(p) + "[" + std::to_string(row) + "][" +
                                             std::to_string(col) + "]"},
                                {"kind", "T"},
                                {"part", p},
                                {"row", row},
                                {"col", col}});
    for (std::size_t q = 0; q < sys.num_row_parts; ++q)
        for (std::size_t row = 0; row < sys.span_dim; ++row)
            for (std::size_t col = 0; col < sys.r; ++col)
                vars.push_back({{"name", "S" + std::to_string(q) + "[" + std::to_string(row) + "][" +
                                             std::to_string(col) + "]"},
                                {"kind", "S"},
                                {"part", q},
                                {"row", row},
                                {"col", col}});

    nlohmann::json linear = nlohmann::json::array();
    for (std::size_t i = 0; i < sys.m_c.cols(); ++i) {
        const std::size_t p = sys.col_part[i];
        for (std::size_t row = 0; row < sys.r; ++row) {
            nlohmann::json terms = nlohmann::json::array();
            for (std::size_t col = 0; col < sys.span_dim; ++col)
                terms.push_back(
                    {{"var", sys.t_offset(p) + row * sys.span_dim + col}, {"coeff", sys.m_c(col, i)}});
            linear.push_back({{"terms", terms},
                              {"relation", ">="},
                              {"rhs", 0.0},
                              {"meaning", "w-column " + std::to_string(i) + " coord " + std::to_string(row)}});
        }
    }
    for (std::size_t j = 0; j < sys.m_r.rows(); ++j) {
        const std::size_t q = sys.row_part[j];
        for (std::size_t col = 0; col < sys.r; ++col) {
            nlohmann::json terms = nlohmann::json::array();
            for (std::size_t row = 0; row < sys.span_dim; ++row)
                terms.push_back(
                    {{"var", sys.s_offset(q) + row * sys.r + col}, {"coeff", sys.m_r(j, row)}});
            linear.push_back({{"terms", terms},
                              {"relation", ">="},
                              {"rhs", 0.0},
                              {"meaning", "a-row " + std::to_string(j) + " coord " + std::to_string(col)}});
        }
    }

    nlohmann::json bilinear = nlohmann::json::array();
    for (std::size_t j = 0; j < sys.m_r.rows(); ++j) {
        const std::size_t q = sys.row_part[j];
        for (std::size_t i = 0; i < sys.m_c.cols(); ++i) {
            const std::size_t p = sys.col_part[i];
            nlohmann::json terms = nlohmann::json::array();
            for (std::size_t a = 0; a < sys.span_dim; ++a)
                for (std::size_t b = 0; b < sys.r; ++b)
                    for (std::size_t c = 0; c < sys.span_dim; ++c)
                        terms.push_back({{"s_var", sys.s_offset(q) + a * sys.r + b},
                                         {"t_var", sys.t_offset(p) + b * sys.span_dim + c},
                                         {"coeff", sys.m_r(j, a) * sys.m_c(c, i)}});
            bilinear.push_back({{"terms", terms}, {"rhs", m(j, i)}});
        }
    }

    return {{"r", sys.r},
            {"span_dim", sys.span_dim},
            {"num_col_parts", sys.num_col_parts},
            {"num_row_parts", sys.num_row_parts},
            {"col_part", sys.col_part},
            {"row_part", sys.row_part},
            {"m_c", matrix_to_json(sys.m_c)},
            {"m_r", matrix_to_json(sys.m_r)},
            {"variables", vars},
            {"linear_constraints", linear},
            {"bilinear_equations", bilinear}};
}

} // namespace nmfpack

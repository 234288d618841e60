#include "trusteval/embed.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "trusteval/errors.hpp"
#include "trusteval/rng.hpp"

namespace trusteval {

void validate_params(const ModelParams& m) {
    if (m.p < 1) throw validation_error("model: p must be >= 1");
    if (m.d != kFeatureDim) throw validation_error("model: d must be 2");
    if (m.L < 1) throw validation_error("model: L must be >= 1");
    if (m.H < 2) throw validation_error("model: H must be >= 2");
    if (m.W1.rows != m.p || m.W1.cols != m.d) throw validation_error("model: W1 must be p x d");
    if (m.P.size() != m.H) throw validation_error("model: need exactly H sigma maps");
    for (const auto& P : m.P)
        if (P.rows != m.p || P.cols != m.p) throw validation_error("model: each P must be p x p");
    if (m.W2.rows != m.p || m.W2.cols != m.p) throw validation_error("model: W2 must be p x p");
}

Vec sigma(const ModelParams& m, const Vec& x) {
    if (x.size() != m.p) throw validation_error("sigma: input length must be p");
    Vec t = matvec(m.P[m.H - 1], x);
    for (std::size_t h = m.H - 1; h-- > 0;) t = matvec(m.P[h], relu(t));
    return t;
}

ForwardCache forward_cached(const ModelParams& m, const Acfg& g) {
    validate_params(m);
    ForwardCache c;
    c.u.resize(m.L + 1);
    c.sig_in.resize(m.L);
    c.t.resize(m.L);
    for (auto& uk : c.u[0]) uk.assign(m.p, 0.0);

    for (std::size_t l = 1; l <= m.L; ++l) {
        for (std::size_t k = 0; k < kVertexCount; ++k) {
            Vec agg(m.p, 0.0);
            for (int j : Acfg::in_neighbors(k)) add_in_place(agg, c.u[l - 1][j]);
            c.sig_in[l - 1][k] = agg;

            // sigma with every pre-relu value kept for the backward pass
            auto& tk = c.t[l - 1][k];
            tk.assign(m.H, Vec{});
            tk[m.H - 1] = matvec(m.P[m.H - 1], agg);
            for (std::size_t h = m.H - 1; h-- > 0;) tk[h] = matvec(m.P[h], relu(tk[h + 1]));

            Vec pre(m.p);
            const Vec feat(g.r[k].begin(), g.r[k].end());
            Vec w1r = matvec(m.W1, feat);
            for (std::size_t i = 0; i < m.p; ++i) pre[i] = w1r[i] + tk[0][i];
            c.u[l][k] = tanh_vec(pre);
        }
    }

    c.sum_uL.assign(m.p, 0.0);
    for (const auto& uk : c.u[m.L]) add_in_place(c.sum_uL, uk);
    c.U = matvec(m.W2, c.sum_uL);
    return c;
}

Embedding forward(const ModelParams& m, const Acfg& g) {
    ForwardCache c = forward_cached(m, g);
    return Embedding{std::move(c.U), std::move(c.u.back())};
}

ModelParams init_params(std::size_t p, std::size_t d, std::size_t L, std::size_t H,
                        std::uint64_t seed) {
    if (p < 1 || d != kFeatureDim || L < 1 || H < 2)
        throw validation_error("init_params: invalid dimensions (need p >= 1, d = 2, L >= 1, H >= 2)");
    ModelParams m;
    m.p = p;
    m.d = d;
    m.L = L;
    m.H = H;
    std::mt19937_64 rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    auto fill = [&](Mat& mat, std::size_t rows, std::size_t cols) {
        mat = Mat(rows, cols);
        for (auto& v : mat.a) v = uniform_in(rng, -scale, scale);
    };
    fill(m.W1, p, d);
    m.P.resize(H);
    for (auto& P : m.P) fill(P, p, p);
    fill(m.W2, p, p);
    return m;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat mat_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* name) {
    if (!j.is_array() || j.size() != rows)
        throw shape_error(std::string("model: '") + name + "' row count mismatch");
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != cols)
            throw shape_error(std::string("model: '") + name + "' column count mismatch");
        for (std::size_t jj = 0; jj < cols; ++jj) {
            if (!row[jj].is_number())
                throw file_corrupt_error(std::string("model: non-numeric entry in '") + name + "'");
            m(i, jj) = row[jj].get<double>();
        }
    }
    return m;
}

std::size_t read_dim(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_unsigned())
        throw file_corrupt_error(std::string("model: missing or invalid '") + key + "'");
    return j[key].get<std::size_t>();
}

} // namespace

std::string model_to_json(const ModelParams& m) {
    validate_params(m);
    nlohmann::json j{
        {"format_version", 1},
        {"p", m.p},
        {"d", m.d},
        {"L", m.L},
        {"H", m.H},
        {"W1", mat_to_json(m.W1)},
        {"W2", mat_to_json(m.W2)},
        {"norm_stats", norm_stats_to_json(m.norm_stats)},
    };
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& P : m.P) ps.push_back(mat_to_json(P));
    j["P"] = std::move(ps);
    return j.dump();
}

void save_model(const ModelParams& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw file_missing_error("cannot open for writing: " + path);
    out << model_to_json(m) << '\n';
    if (!out) throw file_corrupt_error("short write: " + path);
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw file_missing_error("cannot open: " + path);
    std::stringstream buf;
    buf << in.rdbuf();

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw file_corrupt_error(std::string("model: bad JSON: ") + e.what());
    }
    if (!j.is_object()) throw file_corrupt_error("model: not a JSON object");

    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        throw file_corrupt_error("model: missing 'format_version'");
    if (j["format_version"].get<int>() != 1)
        throw version_error("model: unsupported format_version " +
                            std::to_string(j["format_version"].get<int>()));

    ModelParams m;
    m.p = read_dim(j, "p");
    m.d = read_dim(j, "d");
    m.L = read_dim(j, "L");
    m.H = read_dim(j, "H");
    if (m.p < 1 || m.d != kFeatureDim || m.L < 1 || m.H < 2)
        throw shape_error("model: unacceptable dimensions");

    if (!j.contains("W1") || !j.contains("P") || !j.contains("W2") || !j.contains("norm_stats"))
        throw file_corrupt_error("model: missing parameter field");
    m.W1 = mat_from_json(j["W1"], m.p, m.d, "W1");
    if (!j["P"].is_array() || j["P"].size() != m.H)
        throw shape_error("model: 'P' must hold exactly H matrices");
    m.P.reserve(m.H);
    for (std::size_t h = 0; h < m.H; ++h)
        m.P.push_back(mat_from_json(j["P"][h], m.p, m.p, "P"));
    m.W2 = mat_from_json(j["W2"], m.p, m.p, "W2");
    m.norm_stats = norm_stats_from_json(j["norm_stats"]);

    for (const auto& mat : {std::cref(m.W1), std::cref(m.W2)})
        for (double v : mat.get().a)
            if (!std::isfinite(v)) throw file_corrupt_error("model: non-finite entry");
    for (const auto& P : m.P)
        for (double v : P.a)
            if (!std::isfinite(v)) throw file_corrupt_error("model: non-finite entry");
    return m;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
    return a.p == b.p && a.d == b.d && a.L == b.L && a.H == b.H && a.W1 == b.W1 && a.P == b.P &&
           a.W2 == b.W2 && a.norm_stats == b.norm_stats;
}

} // namespace trusteval

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ovg/core.hpp"

namespace ovg {

/// Dense row-major matrix of doubles. The only tensor type in the pipeline;
/// desk-scale shapes (hundreds of rows, tens of columns) never justify more.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols)
            throw DimensionError("matrix data length does not match rows*cols");
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && data == o.data; }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                             " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            const double* brow = b.row(k);
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

/// Row-wise softmax, stabilized by per-row max subtraction.
inline Matrix row_softmax(const Matrix& m) {
    if (!m.all_finite()) throw ParamError("row_softmax: non-finite input");
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* in = m.row(i);
        double* o = out.row(i);
        double mx = in[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < m.cols; ++j) o[j] /= sum;
    }
    return out;
}

/// Scales every row to unit Euclidean norm. Rows with norm < eps are refused:
/// downstream cosine scores would be meaningless.
inline Matrix l2_normalize_rows(const Matrix& m, double eps = 1e-12) {
    if (eps <= 0.0) throw ParamError("l2_normalize_rows: eps must be > 0");
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* in = m.row(i);
        double sq = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) sq += in[j] * in[j];
        const double norm = std::sqrt(sq);
        if (norm < eps) throw RowDegenerateError(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) o[j] = in[j] / norm;
    }
    return out;
}

/// x*w + b, with b broadcast over rows.
inline Matrix linear(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    if (x.cols != w.rows) throw DimensionError("linear: x.cols != w.rows");
    if (b.size() != w.cols) throw DimensionError("linear: bias length != w.cols");
    Matrix out = matmul(x, w);
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* o = out.row(i);
        for (std::size_t j = 0; j < out.cols; ++j) o[j] += b[j];
    }
    return out;
}

struct AttentionConfig {
    std::size_t num_heads = 1;
    std::size_t model_dim = 32;
    double scale = 0.0;  // 1/sqrt(head_dim); filled by standard() if left 0

    static AttentionConfig standard(std::size_t heads, std::size_t dim) {
        if (heads == 0 || dim == 0 || dim % heads != 0)
            throw DimensionError("attention: model_dim must be divisible by num_heads");
        AttentionConfig cfg;
        cfg.num_heads = heads;
        cfg.model_dim = dim;
        cfg.scale = 1.0 / std::sqrt(static_cast<double>(dim / heads));
        return cfg;
    }

    void validate() const {
        if (num_heads == 0 || model_dim == 0 || model_dim % num_heads != 0)
            throw DimensionError("attention: model_dim must be divisible by num_heads");
        if (!(scale > 0.0)) throw ParamError("attention: scale must be > 0");
    }
};

/// Optional learned projections. When absent, attention runs with identity
/// projections; nothing in this repo trains, so identity is the default.
struct AttentionWeights {
    Matrix wq, wk, wv, wo;
};

namespace detail {

// softmax(q_h * k_h^T * scale) * v_h for one head's column slice.
inline void attend_head(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t col0,
                        std::size_t head_dim, double scale, Matrix& out) {
    Matrix scores(q.rows, k.rows);
    for (std::size_t i = 0; i < q.rows; ++i) {
        for (std::size_t j = 0; j < k.rows; ++j) {
            double dot = 0.0;
            const double* qr = q.row(i) + col0;
            const double* kr = k.row(j) + col0;
            for (std::size_t d = 0; d < head_dim; ++d) dot += qr[d] * kr[d];
            scores(i, j) = dot * scale;
        }
    }
    const Matrix weights = row_softmax(scores);
    for (std::size_t i = 0; i < q.rows; ++i) {
        double* o = out.row(i) + col0;
        for (std::size_t j = 0; j < k.rows; ++j) {
            const double w = weights(i, j);
            const double* vr = v.row(j) + col0;
            for (std::size_t d = 0; d < head_dim; ++d) o[d] += w * vr[d];
        }
    }
}

}  // namespace detail

inline Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                   const AttentionConfig& cfg,
                                   const AttentionWeights* weights = nullptr) {
    cfg.validate();
    if (q.cols != cfg.model_dim || k.cols != cfg.model_dim || v.cols != cfg.model_dim)
        throw DimensionError("attention: q/k/v columns must equal model_dim");
    if (k.rows != v.rows) throw DimensionError("attention: k and v must have equal row counts");
    if (k.rows == 0) throw DimensionError("attention: empty key/value set");

    const Matrix& qp = weights ? matmul(q, weights->wq) : q;
    const Matrix& kp = weights ? matmul(k, weights->wk) : k;
    const Matrix& vp = weights ? matmul(v, weights->wv) : v;

    const std::size_t head_dim = cfg.model_dim / cfg.num_heads;
    Matrix out(q.rows, cfg.model_dim);
    for (std::size_t h = 0; h < cfg.num_heads; ++h)
        detail::attend_head(qp, kp, vp, h * head_dim, head_dim, cfg.scale, out);

    if (weights) return matmul(out, weights->wo);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: "OVGM" + u32 rows + u32 cols (little-endian) + f64 payload.
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "matrix binary format assumes a little-endian host");

inline void save_matrix(const Matrix& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f.write("OVGM", 4);
    const std::uint32_t r = static_cast<std::uint32_t>(m.rows);
    const std::uint32_t c = static_cast<std::uint32_t>(m.cols);
    f.write(reinterpret_cast<const char*>(&r), 4);
    f.write(reinterpret_cast<const char*>(&c), 4);
    f.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!f) throw IoError("write failed: " + path);
}

inline Matrix load_matrix(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for read: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "OVGM", 4) != 0) throw IoError("bad magic in " + path);
    std::uint32_t r = 0, c = 0;
    f.read(reinterpret_cast<char*>(&r), 4);
    f.read(reinterpret_cast<char*>(&c), 4);
    Matrix m(r, c);
    f.read(reinterpret_cast<char*>(m.data.data()),
           static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!f) throw IoError("truncated matrix file: " + path);
    return m;
}

/// CSV debug export; not meant to round-trip.
inline void save_matrix_csv(const Matrix& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    char buf[40];
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            f << buf << (j + 1 < m.cols ? "," : "");
        }
        f << "\n";
    }
}

}  // namespace ovg

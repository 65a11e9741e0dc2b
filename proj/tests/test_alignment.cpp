#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "ovg/alignment.hpp"

using ovg::AlignmentParams;
using ovg::AttentionConfig;
using ovg::ConstraintField;
using ovg::Matrix;

namespace {

// builds a row matrix of unit vectors whose dot with one-hot `t` is `dots[i]`
Matrix rows_with_dot(const std::vector<double>& t, const std::vector<double>& dots) {
    const std::size_t dim = t.size();
    std::size_t hot = 0;
    for (std::size_t j = 1; j < dim; ++j)
        if (std::abs(t[j]) > std::abs(t[hot])) hot = j;
    const std::size_t perp = (hot + 1) % dim;

    Matrix m(dots.size(), dim);
    for (std::size_t i = 0; i < dots.size(); ++i) {
        const double d = dots[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - d * d));
        for (std::size_t j = 0; j < dim; ++j) m(i, j) = d * t[j];
        m(i, perp) += s;
    }
    return m;
}

double score_of(double dot_v, double beta, double theta) {
    std::vector<double> t(4, 0.0);
    t[0] = 1.0;
    const Matrix rows = rows_with_dot(t, {dot_v});
    return constraint_score(rows, t, beta, theta).scores[0];
}

}  // namespace

TEST_CASE("igla with alpha 0 is the identity on text features") {
    ovg::Rng rng(21);
    const Matrix image = oracle::random_matrix(rng, 12, 8);
    const Matrix text = oracle::random_matrix(rng, 3, 8);
    AlignmentParams params;
    params.alpha = 0.0;
    const Matrix out = igla(image, text, params, AttentionConfig::standard(1, 8));
    CHECK(out == text);  // bit-exact
}

TEST_CASE("igla with a single image location blends that vector into every token") {
    ovg::Rng rng(22);
    const Matrix image = oracle::random_matrix(rng, 1, 8);
    const Matrix text = oracle::random_matrix(rng, 4, 8);
    AlignmentParams params;  // alpha = 0.5 default
    CHECK(params.alpha == 0.5);
    CHECK(params.lambda == 0.6);
    const Matrix out = igla(image, text, params, AttentionConfig::standard(1, 8));
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j)
            CHECK(std::abs(out(i, j) - (0.5 * image(0, j) + text(i, j))) < 1e-12);
}

TEST_CASE("igla rejects mismatched dimensions") {
    AlignmentParams params;
    CHECK_THROWS_AS(igla(Matrix(2, 8), Matrix(2, 4), params, AttentionConfig::standard(1, 8)),
                    ovg::DimensionError);
}

TEST_CASE("lgia_project") {
    ovg::Rng rng(23);
    const Matrix unit = l2_normalize_rows(oracle::random_matrix(rng, 3, 4));
    const Matrix same = ovg::lgia_project(unit, Matrix::identity(4), std::vector<double>(4, 0.0));
    for (std::size_t i = 0; i < same.data.size(); ++i)
        CHECK(std::abs(same.data[i] - unit.data[i]) < 1e-12);

    const Matrix scaled =
        ovg::lgia_project(Matrix(1, 2, {3.0, 4.0}), Matrix::identity(2), std::vector<double>(2, 0.0));
    CHECK(std::abs(scaled(0, 0) - 0.6) < 1e-12);
    CHECK(std::abs(scaled(0, 1) - 0.8) < 1e-12);

    CHECK_THROWS_AS(
        ovg::lgia_project(Matrix(1, 2, {0.0, 0.0}), Matrix::identity(2), std::vector<double>(2, 0.0)),
        ovg::RowDegenerateError);
}

TEST_CASE("pool_text") {
    const Matrix one(1, 3, {0.0, 1.0, 0.0});
    const std::vector<double> same = ovg::pool_text(one);
    CHECK(same == std::vector<double>{0.0, 1.0, 0.0});

    const Matrix antipodal(2, 2, {1.0, 0.0, -1.0, 0.0});
    CHECK_THROWS_AS(ovg::pool_text(antipodal), ovg::RowDegenerateError);

    const Matrix pair(2, 2, {1.0, 0.0, 0.0, 1.0});
    const std::vector<double> pooled = ovg::pool_text(pair);
    CHECK(std::abs(pooled[0] - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(pooled[1] - 1.0 / std::sqrt(2.0)) < 1e-12);

    CHECK_THROWS_AS(ovg::pool_text(Matrix(0, 3)), ovg::EmptyTextError);
}

TEST_CASE("constraint score closed forms") {
    CHECK(score_of(1.0, 2.5, 0.7) == 2.5);  // exact at a perfect match
    CHECK(std::abs(score_of(0.0, 1.0, 1.0) - std::exp(-0.5)) < 1e-12);

    // monotone in theta at dot = -1
    const double s1 = score_of(-1.0, 1.0, 1.0);
    const double s05 = score_of(-1.0, 1.0, 0.5);
    const double s01 = score_of(-1.0, 1.0, 0.1);
    CHECK(s1 > s05);
    CHECK(s05 > s01);
    CHECK(s01 >= 0.0);

    CHECK_THROWS_AS(score_of(0.0, -1.0, 1.0), ovg::ParamError);
    CHECK_THROWS_AS(score_of(0.0, 1.0, 0.0), ovg::ParamError);
}

TEST_CASE("constraint score stays in (0, beta] and ignores location order") {
    ovg::Rng rng(24);
    std::vector<double> t(6, 0.0);
    t[2] = 1.0;
    std::vector<double> dots(20);
    for (double& d : dots) d = rng.uniform(-1.0, 1.0);
    const Matrix rows = rows_with_dot(t, dots);
    const ConstraintField field = constraint_score(rows, t, 0.9, 0.6);
    for (double s : field.scores) {
        CHECK(s > 0.0);
        CHECK(s <= 0.9 + 1e-15);
    }

    std::vector<double> reversed_dots(dots.rbegin(), dots.rend());
    const ConstraintField rev = constraint_score(rows_with_dot(t, reversed_dots), t, 0.9, 0.6);
    for (std::size_t i = 0; i < dots.size(); ++i)
        CHECK(field.scores[i] == rev.scores[dots.size() - 1 - i]);
}

TEST_CASE("constraint score gradients: closed forms") {
    std::vector<double> t(4, 0.0);
    t[0] = 1.0;

    const Matrix at_one = rows_with_dot(t, {1.0});
    const auto [db1, dt1] = constraint_score_grad(at_one, t, 1.7, 0.4);
    CHECK(std::abs(db1[0] - 1.0) < 1e-12);
    CHECK(std::abs(dt1[0]) < 1e-12);

    const Matrix at_zero = rows_with_dot(t, {0.0});
    const auto [db0, dt0] = constraint_score_grad(at_zero, t, 1.0, 1.0);
    CHECK(std::abs(db0[0] - std::exp(-0.5)) < 1e-12);
    CHECK(std::abs(dt0[0] - std::exp(-0.5)) < 1e-12);
}

TEST_CASE("constraint score gradients match central finite differences") {
    ovg::Rng rng(25);
    std::vector<double> t(8, 0.0);
    t[0] = 1.0;
    const double h = 1e-6;
    for (int it = 0; it < 100; ++it) {
        const double dot_v = rng.uniform(-0.9, 0.9);
        const double beta = rng.uniform(0.2, 2.0);
        const double theta = rng.uniform(0.3, 1.5);
        const Matrix rows = rows_with_dot(t, {dot_v});

        const auto [d_beta, d_theta] = constraint_score_grad(rows, t, beta, theta);
        const double fd_beta = (constraint_score(rows, t, beta + h, theta).scores[0] -
                                constraint_score(rows, t, beta - h, theta).scores[0]) /
                               (2.0 * h);
        const double fd_theta = (constraint_score(rows, t, beta, theta + h).scores[0] -
                                 constraint_score(rows, t, beta, theta - h).scores[0]) /
                                (2.0 * h);
        CHECK(std::abs(d_beta[0] - fd_beta) / std::max(1e-12, std::abs(fd_beta)) < 1e-5);
        CHECK(std::abs(d_theta[0] - fd_theta) / std::max(1e-12, std::abs(fd_theta)) < 1e-5);
    }
}

TEST_CASE("lgia_blend") {
    ovg::Rng rng(26);
    const Matrix image = oracle::random_matrix(rng, 5, 4);
    ConstraintField field;
    field.beta_used = 1.0;
    field.theta_used = 0.5;
    field.scores.assign(5, 0.3);

    const Matrix untouched = lgia_blend(image, field, 0.0);
    CHECK(untouched == image);  // gain is exactly 1

    ConstraintField unit_field = field;
    unit_field.scores.assign(5, 1.0);
    const Matrix still = lgia_blend(image, unit_field, 1.0);
    CHECK(still == image);

    // gain factor range: (1 - lambda, 1 - lambda + lambda * beta]
    const double lambda = 0.6;
    const Matrix blended = lgia_blend(image, field, lambda);
    for (std::size_t i = 0; i < image.rows; ++i) {
        const double gain = blended(i, 0) / image(i, 0);
        CHECK(gain > 1.0 - lambda);
        CHECK(gain <= 1.0 - lambda + lambda * field.beta_used + 1e-15);
    }

    ConstraintField short_field = field;
    short_field.scores.resize(3);
    CHECK_THROWS_AS(lgia_blend(image, short_field, 0.5), ovg::DimensionError);
    CHECK_THROWS_AS(lgia_blend(image, field, 1.5), ovg::ParamError);
}

TEST_CASE("projection init is seed-stable and bounded") {
    const Matrix a = ovg::init_projection(32, 32, 7);
    const Matrix b = ovg::init_projection(32, 32, 7);
    const Matrix c = ovg::init_projection(32, 32, 8);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    const double bound = 1.0 / std::sqrt(32.0);
    for (double v : a.data) CHECK(std::abs(v) <= bound);
}

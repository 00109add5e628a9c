#include <genbundle/structures.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace genbundle;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double pi = std::numbers::pi;

Vec v2(double a, double b) {
    Vec x(2);
    x << a, b;
    return x;
}

AtlasPtr plane() {
    return std::make_shared<const Atlas>(
        Atlas::chart_based("plane", {Chart{"p", Box{{{-1.0, 1.0}, {-1.0, 1.0}}}}}, {}));
}

Metric constant_metric(const Mat& G) { return Metric("const", {{"p", [G](const Vec&) -> Mat { return G; }}}); }

Mat random_spd(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Mat A(2, 2);
    A << d(rng), d(rng), d(rng), d(rng);
    return A * A.transpose() + 0.2 * Mat::Identity(2, 2);
}

std::vector<ManifoldPoint> band_points(const Atlas& a, int per_axis) {
    std::vector<ManifoldPoint> out;
    for (const Chart& c : a.charts())
        for (Vec& x : box_grid(c.domain, {static_cast<std::size_t>(per_axis), static_cast<std::size_t>(per_axis)}, 1e-3))
            out.push_back({c.name, x});
    return out;
}

}  // namespace

TEST_CASE("Möbius vector fields", "[structures]") {
    const BandFields f = mobius_fields();
    const ManifoldPoint u0{"y", v2(0.0, 0.3)};
    CHECK((f.Y.at(u0).tangent - v2(0, 1)).norm() == 0.0);
    CHECK(f.Z.at(u0).tangent.norm() == 0.0);
    const ManifoldPoint half{"x", v2(0.5, -0.2)};
    CHECK(f.Y.at(half).tangent.norm() < 1e-16);
    CHECK((f.Z.at(half).tangent - v2(0, 1)).norm() == 0.0);
    CHECK_THAT(f.Y.at({"x", v2(0.25, 0.0)}).tangent[1], WithinAbs(0.7071067811865476, 1e-15));
    CHECK((f.X.at(half).tangent - v2(1, 0)).norm() == 0.0);
}

TEST_CASE("Möbius frame values and determinant", "[structures]") {
    const SectionFrame fr = mobius_frame();
    CHECK(fr.sections().size() == 4);
    CHECK(fr.provenance() == FrameProvenance::mobius);
    // w3 = Y - flat Z and w4 = Z + flat Y trade places between u = 0 and u = 1/2.
    const auto at0 = fr.matrix_at({"y", v2(0.0, 0.1)});
    CHECK((at0.col(2) - (Vec(4) << 0, 1, 0, 0).finished()).norm() < 1e-15);
    CHECK((at0.col(3) - (Vec(4) << 0, 0, 0, 1).finished()).norm() < 1e-15);
    const auto at_half = fr.matrix_at({"x", v2(0.5, 0.1)});
    CHECK((at_half.col(2) - (Vec(4) << 0, 0, 0, -1).finished()).norm() < 1e-15);
    CHECK((at_half.col(3) - (Vec(4) << 0, 1, 0, 0).finished()).norm() < 1e-15);
    for (const ManifoldPoint& p : band_points(fr.atlas(), 17))
        REQUIRE_THAT(std::abs(fr.matrix_at(p).determinant()), WithinAbs(1.0, 1e-14));
}

TEST_CASE("frame construction errors", "[structures]") {
    const SectionFrame fr = mobius_frame();
    std::vector<Section> three(fr.sections().begin(), fr.sections().begin() + 3);
    CHECK_THROWS_AS(SectionFrame("short", fr.atlas_ptr(), three, FrameProvenance::user), std::invalid_argument);
    CHECK_THROWS_AS(sphere_frame(2), std::invalid_argument);

    const Atlas m = mobius_atlas();
    std::map<std::string, Metric::MatrixFn> fns;
    fns["x"] = [](const Vec& x) -> Mat { return (Mat(2, 2) << 1, 0, 0, 1 + x[0]).finished(); };
    fns["y"] = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
    CHECK_THROWS_AS(mobius_frame(Metric("glued-wrong", fns)), std::domain_error);
}

TEST_CASE("S^3 quaternion frame", "[structures]") {
    Vec e(4);
    e << 1, 0, 0, 0;
    CHECK(quaternion_left_fields(e) == Mat::Identity(4, 4).rightCols(3));

    const SectionFrame s3 = sphere_frame(3);
    CHECK(s3.sections().size() == 6);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    for (int i = 0; i < 200; ++i) {
        Vec p(4);
        for (int k = 0; k < 4; ++k) p[k] = d(rng);
        p.normalize();
        const Mat W = s3.matrix_at({ambient_chart, p});
        REQUIRE((W.transpose() * W - Mat::Identity(6, 6)).norm() < 1e-12);
    }
}

TEST_CASE("metric structures on a constant metric", "[structures]") {
    Mat G = Mat::Identity(2, 2);
    G(1, 1) = 2;
    const auto atlas = plane();
    const Metric g = constant_metric(G);
    const ManifoldPoint p{"p", v2(0, 0)};
    const GenVector e = make_gen_vector(p, v2(1, 0), v2(0, 1));

    const GenVector Fe = structure_from_metric(atlas, g, StructureKind::paracomplex)(e);
    CHECK((Fe.tangent - v2(0, 0.5)).norm() < 1e-15);
    CHECK((Fe.covector - v2(1, 0)).norm() < 1e-15);

    const GenVector Je = structure_from_metric(atlas, g, StructureKind::complex)(e);
    CHECK((Je.tangent - v2(0, -0.5)).norm() < 1e-15);
    CHECK((Je.covector - v2(1, 0)).norm() < 1e-15);
}

TEST_CASE("G0 residuals on hand-evaluated inputs", "[structures]") {
    const auto atlas = plane();
    const GenEndomorphism J = structure_from_metric(atlas, flat_metric(*atlas), StructureKind::complex);
    const ManifoldPoint p{"p", v2(0, 0)};
    const GenVector d1 = make_gen_vector(p, v2(1, 0), v2(0, 0));
    const GenVector dx1 = make_gen_vector(p, v2(0, 0), v2(1, 0));
    CHECK(g0_residuals(J, d1, d1).skew == 1.0);
    CHECK(g0_residuals(J, d1, dx1).skew == 0.0);
    CHECK(g0_residuals(J, d1, dx1).symmetric == 0.0);
}

TEST_CASE("eigenspace ranks", "[structures]") {
    const SectionFrame fr = mobius_frame();
    const GenEndomorphism F = structure_from_metric(fr.atlas_ptr(), *fr.metric(), StructureKind::paracomplex);
    const GenEndomorphism J = structure_from_metric(fr.atlas_ptr(), *fr.metric(), StructureKind::complex);
    const ManifoldPoint p{"x", v2(0.3, 0.4)};
    CHECK(eigen_rank(F, p, 1) == 2);
    CHECK(eigen_rank(F, p, -1) == 2);
    CHECK_THROWS_AS(eigen_rank(J, p, 1), std::invalid_argument);
    CHECK_THROWS_AS(eigen_rank(F, p, 2), std::invalid_argument);

    const GenEndomorphism FF = structure_from_frame(fr, StructureKind::paracomplex);
    for (const ManifoldPoint& q : band_points(fr.atlas(), 9)) {
        REQUIRE(eigen_rank(FF, q, 1) == 2);
        REQUIRE(eigen_rank(FF, q, -1) == 2);
    }
}

TEST_CASE("metric structures are G0-symmetric for random SPD metrics", "[structures][property]") {
    std::mt19937_64 rng(29);
    const auto atlas = plane();
    const std::vector<ManifoldPoint> pts = {{"p", v2(0, 0)}, {"p", v2(0.5, -0.5)}};
    for (int i = 0; i < 100; ++i) {
        const Mat G = random_spd(rng);
        const double scale = 1.0 + G.norm() + G.inverse().norm();
        const Metric g = constant_metric(G);
        for (StructureKind k : {StructureKind::complex, StructureKind::paracomplex}) {
            const GenEndomorphism K = structure_from_metric(atlas, g, k);
            REQUIRE(g0_symmetry_residual(K, pts, 5, 100 + i).symmetric < 1e-13 * scale * scale);
            std::mt19937_64 r2(i);
            for (int t = 0; t < 5; ++t) REQUIRE(square_residual(K, random_gen_vector(*atlas, pts[0], r2)) < 1e-13 * scale * scale);
        }
    }
}

TEST_CASE("frame structures are linear and square to -1 / +1", "[structures][property]") {
    const SectionFrame fr = klein_frame();
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (StructureKind k : {StructureKind::complex, StructureKind::paracomplex}) {
        const GenEndomorphism K = structure_from_frame(fr, k);
        for (const ManifoldPoint& p : band_points(fr.atlas(), 5)) {
            const GenVector e = random_gen_vector(fr.atlas(), p, rng);
            const GenVector f = random_gen_vector(fr.atlas(), p, rng);
            const double a = d(rng), b = d(rng);
            REQUIRE((K(a * e + b * f).block() - (a * K(e) + b * K(f)).block()).norm() < 1e-12);
            REQUIRE(square_residual(K, e) < 1e-12);
        }
    }
}

TEST_CASE("frame J matches the metric J, frame F does not on the Möbius strip", "[structures]") {
    const SectionFrame fr = mobius_frame();
    const GenEndomorphism Jf = structure_from_frame(fr, StructureKind::complex);
    const GenEndomorphism Ff = structure_from_frame(fr, StructureKind::paracomplex);
    const GenEndomorphism Fm = structure_from_metric(fr.atlas_ptr(), *fr.metric(), StructureKind::paracomplex);
    for (double u : {0.1, 0.25, 0.5, 0.8}) {
        const ManifoldPoint p{"x", v2(u, 0.2)};
        const GenVector dv = make_gen_vector(p, v2(0, 1), v2(0, 0));
        CHECK((Jf(dv).block() - (Vec(4) << 0, 0, 0, 1).finished()).norm() < 1e-14);
        // Swapping w3 and w4 sends d/dv to sin(2 pi u) d/dv + cos(2 pi u) dv,
        // the metric F sends it to dv.
        const Vec expected = (Vec(4) << 0, std::sin(2 * pi * u), 0, std::cos(2 * pi * u)).finished();
        CHECK((Ff(dv).block() - expected).norm() < 1e-14);
        CHECK_THAT((Ff(dv).block() - Fm(dv).block()).norm(), WithinAbs(2 * std::abs(std::sin(pi * u)), 1e-14));
    }

    const auto pts = band_points(fr.atlas(), 11);
    const FrameMetricAgreement agree = frame_vs_metric_agreement(fr, *fr.metric(), pts, 5, 3);
    CHECK(agree.complex < 1e-10);
    CHECK(agree.paracomplex > 0.5);
    CHECK(agree.max() == agree.paracomplex);
}

TEST_CASE("parallelizable frames agree with the metric structures", "[structures]") {
    const SectionFrame s1 = sphere_frame(1);
    std::vector<ManifoldPoint> circle;
    for (const Chart& c : s1.atlas().charts())
        for (Vec& x : box_grid(c.domain, {50}, 1e-3)) circle.push_back({c.name, x});
    const auto a1 = frame_vs_metric_agreement(s1, *s1.metric(), circle, 5, 1);
    CHECK(a1.complex == 0.0);
    CHECK(a1.paracomplex == 0.0);

    const SectionFrame s3 = sphere_frame(3);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d;
    std::vector<ManifoldPoint> pts;
    for (int i = 0; i < 100; ++i) {
        Vec p(4);
        for (int k = 0; k < 4; ++k) p[k] = d(rng);
        pts.push_back({ambient_chart, p.normalized()});
    }
    CHECK(frame_vs_metric_agreement(s3, *s3.metric(), pts, 5, 1).max() < 1e-10);
}

TEST_CASE("singular frames are refused by the frame structures", "[structures]") {
    const SectionFrame fr = mobius_frame();
    std::vector<Section> dup = fr.sections();
    dup[3] = dup[2];
    const SectionFrame bad("dup", fr.atlas_ptr(), dup, FrameProvenance::user);
    const GenEndomorphism J = structure_from_frame(bad, StructureKind::complex);
    const ManifoldPoint p{"x", v2(0.3, 0.0)};
    CHECK_THROWS_AS(J(make_gen_vector(p, v2(1, 0), v2(0, 0))), std::domain_error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "isolab/errors.hpp"
#include "isolab/functionals.hpp"
#include "isolab/special.hpp"

using namespace isolab;

namespace {
const Seed kSeed{0x00f0ccac1a5eed00ull, 0};

bool within3(const EstimateCI& est, double target) {
    return std::fabs(est.value - target) <= 3.0 * est.stderr_ + 1e-9;
}
}  // namespace

TEST_CASE("norm moments agree with gaussian closed forms and refuse deep orders") {
    Measure g = make_gaussian(10);
    SampleBatch batch = draw(g, 200000, kSeed.child("iq"));

    EstimateCI i2 = moment_Iq(g, 2.0, batch);
    CHECK(within3(i2, std::sqrt(10.0)));

    // (E |g|^{-4})^{-1/4} = sqrt(2) (Gamma(5)/Gamma(3))^{1/4} = sqrt(2) 12^{1/4}
    EstimateCI im4 = moment_Iq(g, -4.0, batch);
    CHECK(within3(im4, 2.6321480));

    CHECK_THROWS_AS(moment_Iq(g, -6.0, batch), VarianceRefusalError);
    CHECK_THROWS_AS(moment_Iq(g, -10.0, batch), DomainError);
    CHECK_THROWS_AS(moment_Iq(g, -12.0, batch), DomainError);
    CHECK_THROWS_AS(moment_Iq(g, 0.0, batch), DomainError);
    try {
        moment_Iq(g, -6.0, batch);
    } catch (const VarianceRefusalError& e) {
        CHECK(std::string(e.what()).find("I_negk_via_sections") != std::string::npos);
    }
}

TEST_CASE("section constants are exact and scale like sqrt(n)") {
    CHECK(cnk(2, 1) == doctest::Approx(1.0 / M_PI).epsilon(1e-12));
    CHECK(cnk(3, 2) == doctest::Approx(0.3989422804).epsilon(1e-8));
    for (int n = 2; n <= 50; ++n)
        for (int k = 1; k <= n - 1; k += (n > 10 ? 7 : 1)) {
            double ratio = cnk(n, k) / std::sqrt(static_cast<double>(n));
            CHECK(ratio >= 0.1);
            CHECK(ratio <= 10.0);
        }
    CHECK_THROWS_AS(cnk(3, 3), std::invalid_argument);
}

TEST_CASE("moment-body support functions match known radii and stay monotone") {
    Measure g = make_gaussian(4);
    SampleBatch batch = draw(g, 120000, kSeed.child("zp"));
    Eigen::VectorXd theta = Eigen::VectorXd::Unit(4, 1);

    CHECK(within3(support_Zp(g, 2.0, theta, batch), 1.0));
    CHECK(within3(support_Zp(g, 1.0, theta, batch), 0.7978845608));

    // power means of a fixed batch are non-decreasing in the order
    double prev = 0.0;
    for (double p : {1.0, 2.0, 4.0, 8.0}) {
        double h = support_Zp(g, p, theta, batch).value;
        CHECK(h >= prev - 1e-12);
        prev = h;
    }

    CHECK(support_Zp(g, 41.0, theta, batch).method.find("high-variance") !=
          std::string::npos);
    CHECK_THROWS_AS(support_Zp(g, 0.5, theta, batch), DomainError);
    CHECK_THROWS_AS(support_Zp(g, 2.0, 2.0 * theta, batch), UsageError);

    // isotropic p=2 radius is 1 for every family
    for (const Measure& m : {make_cube(3), make_l1_ball(3), make_simplex(3)}) {
        CAPTURE(family_name(m.family));
        SampleBatch b = draw(m, 120000, kSeed.child(family_name(m.family)));
        CHECK(within3(support_Zp(m, 2.0, Eigen::VectorXd::Unit(3, 0), b), 1.0));
    }
}

TEST_CASE("boundary points solve the support problem on the batch") {
    Measure g = make_gaussian(3);
    SampleBatch batch = draw(g, 100000, kSeed.child("touch"));
    Eigen::VectorXd theta = Eigen::VectorXd::Unit(3, 0);

    // <point, theta> equals the estimated support value identically
    for (double p : {1.0, 2.0, 3.0}) {
        Eigen::VectorXd pt = boundary_point_Zp(g, p, theta, batch);
        double h = support_Zp(g, p, theta, batch).value;
        CHECK(pt.dot(theta) == doctest::Approx(h).epsilon(1e-12));
    }

    // Z_2 of an isotropic measure is the unit ball: touching point is theta
    Eigen::VectorXd pt2 = boundary_point_Zp(g, 2.0, theta, batch);
    CHECK((pt2 - theta).norm() < 0.02);

    // cube, p=1, axis direction: first coordinate is E|x_1| = sqrt(3)/2
    Measure c = make_cube(2);
    SampleBatch cb = draw(c, 150000, kSeed.child("cube-touch"));
    Eigen::VectorXd cpt = boundary_point_Zp(c, 1.0, Eigen::VectorXd::Unit(2, 0), cb);
    CHECK(cpt[0] == doctest::Approx(0.8660254).epsilon(0.01));
    CHECK(std::fabs(cpt[1]) < 0.01);
}

TEST_CASE("volume brackets pin the ball and the gaussian moment disc") {
    // unit ball: bracket straddles (4 pi / 3)^{1/3}, width under 5%
    VolumeBracket ball = volume_bracket(ball_body(3, 1.0), 5000, kSeed.child("vb-ball"));
    double target = std::pow(4.0 * M_PI / 3.0, 1.0 / 3.0);
    CHECK(ball.lowerPerDim.value <= target);
    CHECK(ball.upperPerDim.hi3() >= target);
    CHECK(ball.upperPerDim.value / ball.lowerPerDim.value <= 1.05);

    // gaussian first-moment body in the plane is the disc of radius
    // sqrt(2/pi), so the per-dim volume is sqrt(2)
    Measure g = make_gaussian(2);
    VolumeBracket zb = volume_bracket(zp_body(g, 1.0, nullptr), 2000, kSeed.child("vb-z1"));
    CHECK(zb.lowerPerDim.value <= std::sqrt(2.0));
    CHECK(zb.upperPerDim.hi3() >= std::sqrt(2.0) * 0.999);
    CHECK(zb.lowerPerDim.value >= 0.95 * std::sqrt(2.0));

    // batch-backed body: cube Z_1; only ordering is asserted
    Measure c = make_cube(2);
    auto batch = std::make_shared<SampleBatch>(draw(c, 60000, kSeed.child("vb-cube")));
    VolumeBracket cb = volume_bracket(zp_body(c, 1.0, batch), 800, kSeed.child("vb-c"));
    CHECK(cb.lowerPerDim.value <= cb.upperPerDim.value * (1 + 1e-12));
    CHECK(cb.lowerPerDim.value > 0.0);

    CHECK_THROWS_AS(volume_bracket(ball_body(7, 1.0), 500, kSeed), ScaleRefusalError);
    CHECK_THROWS_AS(volume_bracket(ball_body(3, 1.0), 99, kSeed), UsageError);
}

TEST_CASE("mean widths: exact on balls, monotone in the order") {
    BodyOracle ball = ball_body(4, 1.0);
    DirectionGrid grid = DirectionGrid::uniform(4, 400, kSeed.child("grid"));
    for (double q : {-4.0, -2.0, 1.0, 2.0, 7.0}) {
        EstimateCI w = q_mean_width(ball, q, grid);
        CHECK(w.value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(w.stderr_ == 0.0);
    }
    CHECK_THROWS_AS(q_mean_width(ball, -4.5, grid), DomainError);
    CHECK_THROWS_AS(q_mean_width(ball, 0.0, grid), DomainError);

    // gaussian moment bodies are balls with radius z_p
    Measure g = make_gaussian(4);
    for (double p : {1.0, 2.0, 4.0}) {
        EstimateCI w = q_mean_width(zp_body(g, p, nullptr), 1.0, grid);
        CHECK(w.value == doctest::Approx(gaussian_direction_moment(p)).epsilon(1e-12));
    }

    // power-mean monotonicity on a fixed batch-backed body
    Measure c = make_cube(3);
    auto batch = std::make_shared<SampleBatch>(draw(c, 40000, kSeed.child("width-cube")));
    BodyOracle body = zp_body(c, 2.0, batch);
    DirectionGrid g3 = DirectionGrid::uniform(3, 300, kSeed.child("grid3"));
    double prev = -1.0;
    for (double q : {-3.0, -1.0, 1.0, 2.0, 5.0}) {
        double w = q_mean_width(body, q, g3).value;
        CHECK(w >= prev - 1e-12);
        prev = w;
    }
}

TEST_CASE("marginal densities at zero match product closed forms") {
    // gaussian: exact, stderr-free
    Measure g = make_gaussian(5);
    Rng rng(kSeed.child("haar"));
    Subspace E3 = haar_subspace(5, 3, rng);
    EstimateCI fg = marginal_density_at_zero(g, E3, 10, kSeed);
    CHECK(fg.value == doctest::Approx(0.0634936359).epsilon(1e-9));
    CHECK(fg.stderr_ == 0.0);

    // cube onto an axis: uniform[-sqrt3, sqrt3] density at zero, and the
    // radial estimator is variance-free because the exit radius is constant
    Measure c = make_cube(2);
    Subspace e1 = subspace_from_columns(Eigen::MatrixXd::Identity(2, 1));
    EstimateCI fc = marginal_density_at_zero(c, e1, 64, kSeed.child("cube"));
    CHECK(fc.value == doctest::Approx(0.2886751345948129).epsilon(1e-12));

    // product exponential onto two axes: bivariate factor at zero is 1/2
    Measure e = make_product_exponential(4);
    Subspace e12 = subspace_from_columns(Eigen::MatrixXd::Identity(4, 2));
    EstimateCI fe = marginal_density_at_zero(e, e12, 60000, kSeed.child("exp"));
    CHECK(within3(fe, 0.5));
    CHECK(fe.stderr_ > 0.0);
    CHECK(fe.stderr_ < 0.01);

    Subspace full = subspace_from_columns(Eigen::MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(marginal_density_at_zero(c, full, 10, kSeed), UsageError);
}

TEST_CASE("section route for negative moments matches the direct estimator") {
    // gaussian collapses to the closed form on both ends of the k range
    Measure g2 = make_gaussian(2);
    Rng rng(kSeed.child("unused"));
    EstimateCI s1 = I_negk_via_sections(g2, 1, 16, 1, kSeed);
    CHECK(s1.value == doctest::Approx(0.7978845608).epsilon(1e-9));
    CHECK(s1.stderr_ == 0.0);

    Measure g10 = make_gaussian(10);
    EstimateCI s9 = I_negk_via_sections(g10, 9, 16, 1, kSeed);
    CHECK(s9.value == doctest::Approx(1.8890127).epsilon(1e-4));

    // ball: closed-form oracle for the -2 moment in R^4
    Measure b = make_euclidean_ball(4);
    EstimateCI sb = I_negk_via_sections(b, 2, 96, 512, kSeed.child("ball"));
    CHECK(within3(sb, ball_norm_moment(4, -2.0, b.ballRadius)));

    // cube: two admissible routes agree within combined error (k < n/2)
    Measure c = make_cube(5);
    SampleBatch cb = draw(c, 200000, kSeed.child("cube-iq"));
    EstimateCI direct = moment_Iq(c, -2.0, cb);
    EstimateCI sections = I_negk_via_sections(c, 2, 96, 512, kSeed.child("cube-sec"));
    CHECK(agree3(direct, sections));

    CHECK_THROWS_AS(I_negk_via_sections(c, 5, 16, 8, kSeed), UsageError);
    CHECK_THROWS_AS(I_negk_via_sections(c, 0, 16, 8, kSeed), UsageError);
}

TEST_CASE("marginal constant brackets hold the closed-form values") {
    Measure g = make_gaussian(6);
    Rng rng(kSeed.child("haar-l"));
    Subspace E = haar_subspace(6, 2, rng);
    auto gb = marginal_L_surrogate(g, E, 100, kSeed);
    REQUIRE(gb.exact.has_value());
    CHECK(*gb.exact == doctest::Approx(0.3989422804).epsilon(1e-9));
    CHECK(gb.lo.value <= *gb.exact * (1 + 1e-9));
    CHECK(gb.hi.value >= *gb.exact);

    Measure e = make_product_exponential(4);
    Subspace e12 = subspace_from_columns(Eigen::MatrixXd::Identity(4, 2));
    auto eb = marginal_L_surrogate(e, e12, 60000, kSeed.child("exp-l"));
    CHECK(within3(eb.lo, 0.7071067812));
    CHECK(eb.hi.value == doctest::Approx(M_E * eb.lo.value).epsilon(1e-12));

    Measure raw = make_cube(2);
    raw.isotropic = false;
    CHECK_THROWS_AS(marginal_L_surrogate(raw, e12, 10, kSeed), UnsupportedMeasureError);
}

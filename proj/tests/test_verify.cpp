#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isolab/errors.hpp"
#include "isolab/verify.hpp"

using namespace isolab;

namespace {
const Seed kSeed{0x5eedf00d00c0ffeeull, 7};

RelationReport check(RelationId id, const Measure& m, GridPoint gp = {}) {
    return run_check(id, m, gp, kSeed);
}
}  // namespace

TEST_CASE("relation tags round-trip and enumerate completely") {
    CHECK(all_relations().size() == 17);
    for (RelationId id : all_relations()) {
        CHECK(parse_relation(relation_tag(id)) == id);
    }
    CHECK(parse_relation("section-formula") == RelationId::SectionFormula);
    CHECK(parse_relation("negmoment-via-L") == RelationId::NegMomentViaL);
    CHECK_THROWS_AS(parse_relation("no-such-relation"), UsageError);
    CHECK(std::string(verdict_name(Verdict::Pass)) == "pass");
    CHECK(std::string(verdict_name(Verdict::Indeterminate)) == "indeterminate");
}

TEST_CASE("section formula agrees with the direct moment route") {
    // closed form on the right: I_{-1} of the standard gaussian in the plane
    RelationReport r = check(RelationId::SectionFormula, make_gaussian(2), {.k = 1});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.rhs.value == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    CHECK(r.lhs.value == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(0.02));
    CHECK(r.measureSpec == "gaussian:2");
    CHECK(r.gridPoint.n == 2);

    // sampled direct route on a product family
    RelationReport rc = check(RelationId::SectionFormula, make_cube(6), {.k = 2});
    CHECK(rc.verdict == Verdict::Pass);
    CHECK(*rc.fittedConstant == doctest::Approx(1.0).epsilon(0.05));

    // no independent direct route at half the dimension or deeper
    CHECK_THROWS_AS(check(RelationId::SectionFormula, make_cube(4), {.k = 2}),
                    VarianceRefusalError);
    CHECK_THROWS_AS(check(RelationId::SectionFormula, make_gaussian(4), {.k = 4}),
                    UsageError);
}

TEST_CASE("projecting the moment body commutes with taking the marginal") {
    RelationReport r = check(RelationId::ProjectionIdentity, make_cube(4), {.k = 2});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(*r.fittedConstant == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.note.find("shared batch") != std::string::npos);

    // defaults resolve to the half-dimensional marginal at order two
    RelationReport rd = check(RelationId::ProjectionIdentity, make_gaussian(6));
    CHECK(rd.gridPoint.k == 3);
    CHECK(rd.gridPoint.q == 2.0);
    CHECK(rd.verdict == Verdict::Pass);
}

TEST_CASE("negative moments match the scaled width of the moment body") {
    RelationReport r = check(RelationId::IkWidth, make_cube(6), {.k = 2});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(*r.fittedConstant > 1.0 / 8.0);
    CHECK(*r.fittedConstant < 8.0);

    // gaussian at k=1: both routes have closed-form targets and the fitted
    // constant sits at one
    RelationReport rg = check(RelationId::IkWidth, make_gaussian(4), {.k = 1});
    CHECK(rg.verdict == Verdict::Pass);
    CHECK(*rg.fittedConstant == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("isotropic constant times moment-body volume is order one") {
    RelationReport r = check(RelationId::LZnIdentity, make_gaussian(4));
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.lhs.method == "exact-L-times-volume");
    CHECK(*r.fittedConstant == doctest::Approx(0.783).epsilon(0.10));
    CHECK(r.gridPoint.p == 4.0);

    // only the estimated-volume family lacks a closed sup-norm: bracket
    // midpoint with the widened band
    Eigen::MatrixXd A(6, 3);
    A << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
    Eigen::VectorXd b(6);
    b << 3, 1, 2, 2, 1.5, 1.5;
    RelationReport rs =
        check(RelationId::LZnIdentity, make_hpoly_body(A, b, kSeed.child("hpoly")));
    CHECK(rs.lhs.method == "bracket-L-times-volume");
    CHECK(rs.note.find("band widened") != std::string::npos);
    CHECK(rs.verdict == Verdict::Pass);

    CHECK_THROWS_AS(check(RelationId::LZnIdentity, make_gaussian(8)), ScaleRefusalError);
}

TEST_CASE("density sup-norm stays within e^n of the center value") {
    for (const Measure& m : {make_gaussian(5), make_cube(4), make_product_exponential(3),
                             make_euclidean_ball(4), make_l1_ball(3), make_simplex(3)}) {
        RelationReport r = check(RelationId::Fradelizi, m);
        CHECK(r.verdict == Verdict::Pass);
        // every shipped family peaks at the origin, so the multiplier is one
        CHECK(*r.fittedConstant == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("moment-body inclusion constant matches the gaussian closed form") {
    RelationReport r =
        check(RelationId::ReverseInclusion, make_gaussian(5), {.p = 1.0, .q = 2.0});
    CHECK(r.verdict == Verdict::Pass);
    // (p/q) * z_q/z_p = (1/2) / sqrt(2/pi)
    CHECK(*r.fittedConstant == doctest::Approx(0.5 / std::sqrt(2.0 / M_PI)).epsilon(1e-9));

    RelationReport rc = check(RelationId::ReverseInclusion, make_cube(4), {.p = 2.0, .q = 4.0});
    CHECK(rc.verdict == Verdict::Pass);
    CHECK(*rc.fittedConstant < 8.0);

    CHECK_THROWS_AS(
        check(RelationId::ReverseInclusion, make_gaussian(4), {.p = 2.0, .q = 2.0}),
        UsageError);
}

TEST_CASE("log-Laplace level sets track the polar moment body") {
    RelationReport r = check(RelationId::LambdaPolar, make_gaussian(4), {.p = 2.0});
    CHECK(r.verdict == Verdict::Pass);
    // ball moment body with an exact radius: the gauge alone sets the spread
    CHECK(*r.fittedConstant == doctest::Approx(1.0).epsilon(0.03));
    CHECK(r.note.find("ratio spread") != std::string::npos);

    RelationReport rp = check(RelationId::LambdaPolar, make_product_exponential(4), {.p = 4.0});
    CHECK(rp.verdict == Verdict::Pass);
    CHECK(*rp.fittedConstant < 8.0);
}

TEST_CASE("log-Laplace derivatives match tilted moments") {
    RelationReport r = check(RelationId::TiltDerivatives, make_gaussian(3));
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.lhs.value <= 0.05);
    CHECK(r.rhs.value <= 0.10);
    CHECK(*r.fittedConstant == doctest::Approx(1.0).epsilon(0.11));
}

TEST_CASE("moment bodies are stable under admissible tilts") {
    RelationReport r = check(RelationId::TiltStability, make_gaussian(4));
    CHECK(r.verdict == Verdict::Pass);
    // tilting a gaussian only translates it, so recentred bodies coincide
    CHECK(*r.fittedConstant == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.note.find("tilt point") != std::string::npos);

    RelationReport rc = check(RelationId::TiltStability, make_cube(3), {.p = 2.0, .q = 4.0});
    CHECK(rc.verdict == Verdict::Pass);
    CHECK(*rc.fittedConstant < 8.0);
}

TEST_CASE("hereditary certificate depth is dominated by the qualifying depth") {
    RelationReport r = check(RelationId::Theorem1Chain, make_gaussian(6));
    CHECK(r.verdict == Verdict::Pass);
    // exact hereditary values: both sides land on n/2 and the first grid
    // multiplier already closes the chain
    CHECK(r.lhs.value == 3.0);
    CHECK(r.rhs.value == 3.0);
    CHECK(*r.fittedConstant == 1.0);
    CHECK(r.gridPoint.A == 2.0);
}

TEST_CASE("negative moment at the certificate depth stays sqrt(n)-sized") {
    RelationReport r = check(RelationId::Corollary34, make_gaussian(6));
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.gridPoint.p == 3.0);  // ceil of the hereditary certificate depth
    CHECK(r.lhs.value == doctest::Approx(1.855).epsilon(0.03));
    CHECK(r.rhs.value == doctest::Approx(std::sqrt(6.0) / 2.0).epsilon(1e-12));
    CHECK(*r.fittedConstant < 16.0);
}

TEST_CASE("moment-body volume clears the sqrt(p/n) floor") {
    RelationReport r = check(RelationId::VolumeLower, make_gaussian(4), {.p = 2.0});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(*r.fittedConstant > 2.0);
    CHECK(*r.fittedConstant < 5.0);
    CHECK_THROWS_AS(check(RelationId::VolumeLower, make_gaussian(7)), ScaleRefusalError);
}

TEST_CASE("most marginals carry a small isotropic constant") {
    RelationReport r = check(RelationId::GoodMarginals, make_gaussian(8), {.k = 3});
    CHECK(r.verdict == Verdict::Pass);
    // every gaussian marginal is gaussian again: the qualifying fraction is
    // exactly one against the threshold 1 - e^{-3}
    CHECK(r.lhs.value == 1.0);
    CHECK(r.rhs.value == doctest::Approx(1.0 - std::exp(-3.0)).epsilon(1e-12));

    RelationReport rc = check(RelationId::GoodMarginals, make_cube(6), {.k = 2});
    CHECK(rc.verdict == Verdict::Pass);
    CHECK(rc.lhs.value >= 1.0 - std::exp(-2.0) - 0.02);
}

TEST_CASE("per-dimension volume over sqrt(p) decreases along the orders") {
    RelationReport r =
        check(RelationId::ZpSqrtpMonotone, make_gaussian(4), {.p = 2.0, .q = 4.0});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(*r.fittedConstant == doctest::Approx(1.07).epsilon(0.10));
    CHECK_THROWS_AS(
        check(RelationId::ZpSqrtpMonotone, make_gaussian(4), {.p = 4.0, .q = 2.0}),
        UsageError);
}

TEST_CASE("negative-order width equals the polar volume ratio") {
    // ball moment body: both grids short-circuit to the exact radius
    RelationReport r = check(RelationId::SantaloWidth, make_gaussian(5), {.p = 2.0});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.lhs.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.rhs.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.note.find("polar volume") != std::string::npos);

    RelationReport rc = check(RelationId::SantaloWidth, make_cube(4), {.p = 2.0});
    CHECK(rc.verdict == Verdict::Pass);
}

TEST_CASE("euclidean second moment is sqrt(n) in isotropic position") {
    RelationReport r = check(RelationId::I2Normalization, make_l1_ball(5));
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.rhs.value == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("negative moment tracks the Haar average of marginal constants") {
    RelationReport r = check(RelationId::NegMomentViaL, make_gaussian(6), {.k = 2});
    CHECK(r.verdict == Verdict::Pass);
    // exact marginal constants: the ratio reduces to the section constant
    // over sqrt(n)
    CHECK(*r.fittedConstant == doctest::Approx(0.3257).epsilon(0.03));

    RelationReport rc = check(RelationId::NegMomentViaL, make_cube(6), {.k = 2});
    CHECK(rc.verdict == Verdict::Pass);
    CHECK(*rc.fittedConstant > 1.0 / 8.0);
    CHECK(*rc.fittedConstant < 8.0);
}

TEST_CASE("every relation executes and passes on the gaussian reference") {
    for (RelationId id : all_relations()) {
        RelationReport r = run_check(id, make_gaussian(4), {}, kSeed);
        INFO("relation ", relation_tag(id), ": ", r.note);
        CHECK(r.verdict == Verdict::Pass);
        CHECK(r.measureSpec == "gaussian:4");
    }
}

TEST_CASE("grid runs merge deterministically and summarize constants") {
    GridSummary s = run_grid(RelationId::IkWidth, {"gaussian"}, {4, 6}, kSeed);
    // k in {1, n/3, 2n/3, n-1} deduplicated: three points at n=4, four at n=6
    CHECK(s.reports.size() == 7);
    CHECK(s.failures.empty());
    for (const RelationReport& r : s.reports) CHECK(r.verdict == Verdict::Pass);
    CHECK(s.maxFittedConstant >= 1.0);
    CHECK(s.maxFittedConstant < 1.5);
    CHECK(std::fabs(s.trendSlope) < 0.2);

    GridSummary again = run_grid(RelationId::IkWidth, {"gaussian"}, {4, 6}, kSeed);
    REQUIRE(again.reports.size() == s.reports.size());
    for (std::size_t i = 0; i < s.reports.size(); ++i) {
        CHECK(again.reports[i].lhs.value == s.reports[i].lhs.value);
        CHECK(*again.reports[i].fittedConstant == *s.reports[i].fittedConstant);
    }
}

TEST_CASE("grid failures are collected without aborting the sweep") {
    GridSummary s = run_grid(RelationId::VolumeLower, {"gaussian"}, {4, 8}, kSeed);
    CHECK(s.reports.size() == 2);   // p in {2, 4} at n=4
    CHECK(s.failures.size() == 2);  // the same orders refused at n=8
    for (const GridFailure& f : s.failures) {
        CHECK(f.measureSpec == "gaussian:8");
        CHECK_FALSE(f.message.empty());
    }
    CHECK_THROWS_AS(run_grid(RelationId::IkWidth, {}, {4}, kSeed), UsageError);
    CHECK_THROWS_AS(run_grid(RelationId::IkWidth, {"gaussian"}, {}, kSeed), UsageError);
}

TEST_CASE("fitted constants aggregate with the relation's orientation") {
    RelationReport inc =
        check(RelationId::ReverseInclusion, make_gaussian(5), {.p = 1.0, .q = 2.0});
    int excluded = -1;
    double c = fit_constant(RelationId::ReverseInclusion, {inc}, &excluded);
    CHECK(c == doctest::Approx(0.6267).epsilon(1e-3));
    CHECK(excluded == 0);

    // indeterminate reports are excluded with a count
    RelationReport blocked = inc;
    blocked.verdict = Verdict::Indeterminate;
    c = fit_constant(RelationId::ReverseInclusion, {inc, blocked}, &excluded);
    CHECK(c == doctest::Approx(0.6267).epsilon(1e-3));
    CHECK(excluded == 1);
    CHECK_THROWS_AS(fit_constant(RelationId::ReverseInclusion, {blocked}, nullptr),
                    UsageError);

    // identity relations aggregate the two-sided deviation from one
    RelationReport ident = check(RelationId::SantaloWidth, make_gaussian(5), {.p = 2.0});
    CHECK(fit_constant(RelationId::SantaloWidth, {ident}, nullptr) == 1.0);

    CHECK_THROWS_AS(fit_constant(RelationId::IkWidth, {inc}, nullptr), UsageError);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "esim/dynamics.hpp"
#include "esim/errors.hpp"
#include "esim/rng.hpp"

using namespace esim;

namespace {

ModelSpec box(double B1, double B2, double c) {
    ModelSpec m;
    m.B1 = B1;
    m.B2 = B2;
    m.c = c;
    // background irrelevant for rate evaluation; keep a minimal trace
    m.background = TraceBackground{1.0, {{0.0, 0.0}}};
    return m;
}

RateBundle swap_bundle(const RateBundle& r) {
    RateBundle s;
    s.db1 = r.db2;
    s.db2 = r.db1;
    s.xfer_1to2 = r.xfer_2to1;
    s.xfer_2to1 = r.xfer_1to2;
    s.loss1 = r.loss2;
    s.loss2 = r.loss1;
    s.over1 = r.over2;
    s.over2 = r.over1;
    s.defect1 = r.defect2;
    s.defect2 = r.defect1;
    return s;
}

bool bundles_equal(const RateBundle& a, const RateBundle& b) {
    return a.db1 == b.db1 && a.db2 == b.db2 && a.xfer_1to2 == b.xfer_1to2 &&
           a.xfer_2to1 == b.xfer_2to1 && a.loss1 == b.loss1 && a.loss2 == b.loss2 &&
           a.over1 == b.over1 && a.over2 == b.over2 && a.defect1 == b.defect1 &&
           a.defect2 == b.defect2;
}

Region random_region(Rng& rng) {
    const double u = rng.uniform01();
    return u < 1.0 / 3 ? Region::Empty : (u < 2.0 / 3 ? Region::Interior : Region::Full);
}

double position_for(Region region, double cap, Rng& rng) {
    switch (region) {
        case Region::Empty: return 0.0;
        case Region::Full: return cap;
        default: return rng.uniform(0.25, 0.75) * cap;
    }
}

} // namespace

TEST_CASE("interior/interior passes net generation through") {
    const auto r = instantaneous_rates(Region::Interior, Region::Interior, 2.0, -1.5, {1.0, 1.0},
                                       1.5);
    CHECK(r.db1 == 2.0);
    CHECK(r.db2 == -1.5);
    CHECK(r.xfer_1to2 == 0.0);
    CHECK(r.xfer_2to1 == 0.0);
    CHECK(r.loss1 == 0.0);
    CHECK(r.loss2 == 0.0);
    CHECK(r.over1 == 0.0);
    CHECK(r.over2 == 0.0);
}

TEST_CASE("interior donor covers an empty agent's deficit up to c1") {
    const auto r =
        instantaneous_rates(Region::Interior, Region::Empty, 2.0, -1.5, {1.0, 1.0}, 1.5);
    CHECK(r.db1 == doctest::Approx(1.0));
    CHECK(r.db2 == 0.0);
    CHECK(r.xfer_1to2 == doctest::Approx(1.0));
    CHECK(r.loss2 == doctest::Approx(0.5));
    CHECK(r.loss1 == 0.0);
    check_consistency(r);
}

TEST_CASE("empty donor shares only its own generation") {
    const auto r =
        instantaneous_rates(Region::Empty, Region::Empty, 1.0, -1.0, {10.0, 10.0}, 10.0);
    CHECK(r.db1 == 0.0);
    CHECK(r.db2 == 0.0);
    CHECK(r.xfer_1to2 == doctest::Approx(1.0));
    CHECK(r.loss1 == 0.0);
    CHECK(r.loss2 == doctest::Approx(0.0));
    check_consistency(r);
}

TEST_CASE("full battery shares overflow capped by line capacity") {
    const auto r =
        instantaneous_rates(Region::Full, Region::Interior, 2.0, 0.5, {1.5, 1.5}, 1.5);
    CHECK(r.db1 == 0.0);
    CHECK(r.db2 == doctest::Approx(2.0));
    CHECK(r.xfer_1to2 == doctest::Approx(1.5));
    CHECK(r.over1 == doctest::Approx(0.5));
    check_consistency(r);
}

TEST_CASE("c1 = c2 = 0 in the interior leaves agents uncoupled") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double r1 = rng.uniform(-3.0, 3.0);
        const double r2 = rng.uniform(-3.0, 3.0);
        const auto r = instantaneous_rates(Region::Interior, Region::Interior, r1, r2, {0.0, 0.0},
                                           rng.uniform(0.0, 2.0));
        CHECK(r.db1 == r1);
        CHECK(r.db2 == r2);
        CHECK(r.xfer_1to2 == 0.0);
        CHECK(r.xfer_2to1 == 0.0);
    }
}

TEST_CASE("balance, sign, and symmetry properties at resolved labels") {
    Rng rng(42);
    for (int i = 0; i < 5000; ++i) {
        const ModelSpec model = box(rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0),
                                    rng.uniform(0.0, 2.0));
        const SharingConfig cfg{rng.uniform(0.0, model.c), rng.uniform(0.0, model.c)};
        const double r1 = rng.uniform(-3.0, 3.0);
        const double r2 = rng.uniform(-3.0, 3.0);
        const double b1 = position_for(random_region(rng), model.B1, rng);
        const double b2 = position_for(random_region(rng), model.B2, rng);

        const ResolvedRates res = resolve_rates(b1, b2, r1, r2, model, cfg);
        const RateBundle& r = res.rates;

        // balance identity holds exactly with correctly signed residuals
        CHECK(r.defect1 == 0.0);
        CHECK(r.defect2 == 0.0);
        const double bal1 = r1 + r.xfer_2to1 - r.xfer_1to2 - r.db1 + r.loss1 - r.over1;
        const double bal2 = r2 + r.xfer_1to2 - r.xfer_2to1 - r.db2 + r.loss2 - r.over2;
        CHECK(std::abs(bal1) <= 1e-12);
        CHECK(std::abs(bal2) <= 1e-12);

        CHECK(r.loss1 >= 0.0);
        CHECK(r.loss2 >= 0.0);
        CHECK(r.over1 >= 0.0);
        CHECK(r.over2 >= 0.0);
        CHECK(r.xfer_1to2 >= 0.0);
        CHECK(r.xfer_1to2 <= model.c + 1e-12);
        CHECK(r.xfer_2to1 >= 0.0);
        CHECK(r.xfer_2to1 <= model.c + 1e-12);

        // loss only at an empty battery in deficit; overflow only at a full one
        if (r.loss1 > 0.0) {
            CHECK(res.region1 == Region::Empty);
            CHECK(r1 < 0.0);
        }
        if (r.loss2 > 0.0) {
            CHECK(res.region2 == Region::Empty);
            CHECK(r2 < 0.0);
        }
        if (r.over1 > 0.0) CHECK(b1 == model.B1);
        if (r.over2 > 0.0) CHECK(b2 == model.B2);

        // deficit is covered, never banked (unless the partner overflows)
        if (res.region1 == Region::Empty && r1 < 0.0 && res.region2 != Region::Full)
            CHECK(r.db1 == 0.0);
        if (res.region2 == Region::Empty && r2 < 0.0 && res.region1 != Region::Full)
            CHECK(r.db2 == 0.0);

        // agent swap symmetry is exact
        const ResolvedRates mirrored =
            resolve_rates(b2, b1, r2, r1, box(model.B2, model.B1, model.c),
                          SharingConfig{cfg.c2, cfg.c1});
        CHECK(bundles_equal(mirrored.rates, swap_bundle(r)));
    }
}

TEST_CASE("transfer rate is monotone in the giver's configured cap") {
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const double cap = rng.uniform(0.0, 3.0);
        const double c1 = rng.uniform(0.0, cap);
        const double c1_hi = rng.uniform(c1, cap);
        const SharingConfig lo{c1, rng.uniform(0.0, cap)};
        const SharingConfig hi{c1_hi, lo.c2};
        const Region reg1 = random_region(rng);
        const Region reg2 = random_region(rng);
        const double r1 = rng.uniform(-3.0, 3.0);
        const double r2 = rng.uniform(-3.0, 3.0);
        const auto a = instantaneous_rates(reg1, reg2, r1, r2, lo, cap);
        const auto b = instantaneous_rates(reg1, reg2, r1, r2, hi, cap);
        CHECK(b.xfer_1to2 >= a.xfer_1to2 - 1e-15);
    }
}

TEST_CASE("the empty/full table cell defers to relabelling, not to negative loss") {
    // battery 1 empty with surplus while battery 2 is full but draining:
    // the raw cell freezes db1 at zero, which the resolver unsticks
    const auto raw = instantaneous_rates(Region::Empty, Region::Full, 1.0, -0.5, {1.0, 1.0}, 1.5);
    CHECK(raw.db1 == 0.0);
    CHECK(raw.defect1 > 0.0);
    CHECK_THROWS_AS(check_consistency(raw), SimulationError);

    const ModelSpec model = box(1.0, 1.0, 1.5);
    const auto res = resolve_rates(0.0, 1.0, 1.0, -0.5, model, {1.0, 1.0});
    CHECK(res.rates.db1 == 1.0);
    CHECK(res.rates.db2 == -0.5);
    CHECK(res.rates.defect1 == 0.0);
    CHECK(res.region1 == Region::Interior);
    CHECK(res.region2 == Region::Interior);
}

TEST_CASE("overflow into a pinned full battery slides along the boundary") {
    const ModelSpec model = box(10.0, 10.0, 1.5);
    // battery 2 full and draining slower than the overflow it receives
    const auto res = resolve_rates(10.0, 10.0, 2.0, -0.5, model, {1.5, 1.5});
    CHECK(res.rates.db1 == 0.0);
    CHECK(res.rates.db2 == 0.0);
    CHECK(res.rates.xfer_1to2 == doctest::Approx(0.5));
    CHECK(res.rates.over1 == doctest::Approx(1.5));
    CHECK(res.rates.over2 == 0.0);
    CHECK(res.region1 == Region::Full);
    CHECK(res.region2 == Region::Full);

    // overflow below the drain: no sliding, battery 2 leaves the boundary
    const auto res2 = resolve_rates(10.0, 10.0, 0.4, -0.5, model, {1.5, 1.5});
    CHECK(res2.rates.db2 == doctest::Approx(-0.1));
    CHECK(res2.rates.xfer_1to2 == doctest::Approx(0.4));

    // both full with surpluses: everything beyond the batteries is lost
    const auto res3 = resolve_rates(10.0, 10.0, 2.0, 0.5, model, {1.5, 1.5});
    CHECK(res3.rates.db1 == 0.0);
    CHECK(res3.rates.db2 == 0.0);
    CHECK(res3.rates.xfer_1to2 == 0.0);
    CHECK(res3.rates.xfer_2to1 == 0.0);
    CHECK(res3.rates.over1 == doctest::Approx(2.0));
    CHECK(res3.rates.over2 == doctest::Approx(0.5));
}

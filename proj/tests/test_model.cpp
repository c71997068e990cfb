#include <doctest.h>

#include <algorithm>

#include "esim/config.hpp"
#include "esim/errors.hpp"
#include "esim/model.hpp"
#include "esim/rng.hpp"
#include "support/random_models.hpp"

using namespace esim;

namespace {

bool has_violation(const ValidationReport& report, const std::string& code) {
    return std::any_of(report.violations.begin(), report.violations.end(),
                       [&](const Violation& v) { return v.code == code; });
}

AgentChain two_state(double r_lo, double r_hi) {
    return {{"lo", "hi"}, {-1.0, 1.0, 1.0, -1.0}, {r_lo, r_hi}};
}

} // namespace

TEST_CASE("toy product model is valid with all regeneration states") {
    const auto cfg = make_preset("toy-symmetric");
    const auto report = validate_model(cfg.model);
    CHECK(report.ok());
    const auto* ctmc = cfg.model.ctmc();
    REQUIRE(ctmc != nullptr);
    CHECK(ctmc->size() == 4);
    // product of two unit-rate flip chains leaves each state at rate 2
    for (std::size_t s = 0; s < 4; ++s) CHECK(ctmc->rate(s, s) == doctest::Approx(-2.0));
}

TEST_CASE("broken row sums are reported") {
    ModelSpec model;
    CtmcBackground bg;
    bg.states = {"a", "b"};
    bg.rate_matrix = {-1.0, 1.0, 1.0, -0.5}; // second row sums to 0.5
    bg.netgen = {{1.0, 1.0}, {-1.0, -1.0}};
    model.background = bg;
    model.B1 = model.B2 = 1.0;
    model.c = 1.0;
    const auto report = validate_model(model);
    CHECK(has_violation(report, "rate_matrix row sum"));
}

TEST_CASE("all-positive net generation is missing s2, s3, s4") {
    ModelSpec model;
    CtmcBackground bg;
    bg.states = {"a", "b"};
    bg.rate_matrix = {-1.0, 1.0, 1.0, -1.0};
    bg.netgen = {{1.0, 2.0}, {2.0, 1.0}};
    model.background = bg;
    model.B1 = model.B2 = 1.0;
    model.c = 1.0;
    const auto report = validate_model(model);
    CHECK(!has_violation(report, "s1 missing"));
    CHECK(has_violation(report, "s2 missing"));
    CHECK(has_violation(report, "s3 missing"));
    CHECK(has_violation(report, "s4 missing"));
}

TEST_CASE("disconnected chains fail irreducibility") {
    ModelSpec model;
    CtmcBackground bg;
    bg.states = {"a", "b", "c", "d"};
    bg.rate_matrix = {
        -1.0, 1.0,  0.0,  0.0, //
        1.0,  -1.0, 0.0,  0.0, //
        0.0,  0.0,  -1.0, 1.0, //
        0.0,  0.0,  1.0,  -1.0 //
    };
    bg.netgen = {{1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}};
    model.background = bg;
    model.B1 = model.B2 = 1.0;
    model.c = 1.0;
    CHECK(has_violation(validate_model(model), "irreducibility"));
}

TEST_CASE("products of irreducible agent chains are irreducible") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        AgentChain a = two_state(-rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0));
        AgentChain b = two_state(-rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0));
        a.rate_matrix = {-rng.uniform(0.2, 2.0), 0.0, 0.0, -rng.uniform(0.2, 2.0)};
        a.rate_matrix[1] = -a.rate_matrix[0];
        a.rate_matrix[2] = -a.rate_matrix[3];
        ModelSpec model;
        model.background = product_chain(a, b);
        model.B1 = model.B2 = 1.0;
        model.c = 1.0;
        const auto report = validate_model(model);
        CHECK(!has_violation(report, "irreducibility"));
        CHECK(report.ok());
    }
}

TEST_CASE("trace backgrounds skip the regeneration check with a note") {
    ModelSpec model;
    model.background = TraceBackground{1.0, {{1.0, 1.0}, {2.0, 2.0}}};
    model.B1 = model.B2 = 1.0;
    model.c = 1.0;
    const auto report = validate_model(model);
    CHECK(report.ok());
    REQUIRE(report.notes.size() == 1);
    CHECK(report.notes[0].find("not applicable") != std::string::npos);
}

TEST_CASE("c_max is the other agent's worst deficit, capped by line capacity") {
    // bundled toy: c = 1.5, worst r2 deficit 1.5 -> c1_max = 1.5 (asym1 included)
    for (const char* name : {"toy-symmetric", "toy-asym1", "toy-asym2"}) {
        const auto cfg = make_preset(name);
        CHECK(c_max(cfg.model, 1) == doctest::Approx(1.5));
        CHECK(c_max(cfg.model, 2) == doctest::Approx(1.5));
    }

    ModelSpec model;
    model.background = product_chain(two_state(-1.5, 2.0), two_state(-1.5, 2.0));
    model.B1 = model.B2 = 10.0;
    model.c = 10.0;
    CHECK(c_max(model, 1) == doctest::Approx(1.5)); // min(10, 1.5)

    // the partner is never in deficit -> nothing useful to give
    ModelSpec surplus;
    surplus.background = product_chain(two_state(-1.0, 1.0), two_state(0.5, 2.0));
    surplus.B1 = surplus.B2 = 10.0;
    surplus.c = 10.0;
    CHECK(c_max(surplus, 1) == 0.0);
    CHECK(c_max(surplus, 2) == doctest::Approx(1.0));
}

TEST_CASE("c_max never exceeds the line capacity") {
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        const ModelSpec model = esim::testing::random_model(rng);
        CHECK(c_max(model, 1) <= model.c);
        CHECK(c_max(model, 2) <= model.c);
        CHECK(validate_model(model).ok());
    }
}

TEST_CASE("config validity is checked against c_max") {
    const auto cfg = make_preset("toy-symmetric");
    CHECK_NOTHROW(require_valid_config(cfg.model, {1.5, 1.5}));
    CHECK_THROWS_AS(require_valid_config(cfg.model, {1.6, 0.0}), SimulationError);
    CHECK_THROWS_AS(require_valid_config(cfg.model, {-0.1, 0.0}), SimulationError);
}

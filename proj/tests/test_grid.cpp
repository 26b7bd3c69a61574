// Fixed-grid construction: pooled bounds, ceil-based atom counts, atom
// placement that excludes the lower bound and includes the upper, row-major
// enumeration with the last dimension varying fastest, and the atom cap.
#include <doctest.h>

#include <cmath>

#include "wasp/wasp.hpp"

using namespace wasp;

TEST_CASE("grid on [0,1] with mesh 0.25 places atoms 0.25, 0.5, 0.75, 1.0") {
    Matrix d(2, 1);
    d << 0.0, 1.0;
    Grid g = build_grid({d}, 0.25);
    REQUIRE(g.size() == 4);
    CHECK(g.atoms(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(g.atoms(1, 0) == doctest::Approx(0.50).epsilon(1e-14));
    CHECK(g.atoms(2, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(g.atoms(3, 0) == doctest::Approx(1.00).epsilon(1e-14));
    CHECK(g.mesh == doctest::Approx(0.25));
}

TEST_CASE("atom count is the ceiling of range over mesh") {
    Matrix d(2, 1);
    d << 0.0, 1.0;
    CHECK(build_grid({d}, 0.3).size() == 4);   // ceil(1/0.3) = 4
    CHECK(build_grid({d}, 1.0).size() == 1);   // single atom at the upper bound
    CHECK(build_grid({d}, 0.5).size() == 2);
    Grid g = build_grid({d}, 0.3);
    CHECK(g.atoms(3, 0) == doctest::Approx(1.0));
    CHECK(g.atoms(0, 0) == doctest::Approx(0.25));  // lo + (1/4)(hi-lo), lower bound excluded
}

TEST_CASE("bounds pool every subset and padding expands them") {
    Matrix a(2, 2), b(2, 2);
    a << 0, 5, 1, 7;
    b << -2, 6, 0.5, 8;
    Grid g = build_grid({a, b}, 1.0);
    // pooled lo = (-2, 5), hi = (1, 8)
    CHECK(g.lo[0] == doctest::Approx(-2.0));
    CHECK(g.lo[1] == doctest::Approx(5.0));
    CHECK(g.hi[0] == doctest::Approx(1.0));
    CHECK(g.hi[1] == doctest::Approx(8.0));

    Grid padded = build_grid({a, b}, 1.0, 0.1);
    CHECK(padded.lo[0] == doctest::Approx(-2.3));
    CHECK(padded.hi[0] == doctest::Approx(1.3));
}

TEST_CASE("2-D enumeration is row-major with the last dimension fastest") {
    Matrix d(2, 2);
    d << 0, 10, 1, 12;
    Grid g = build_grid_counts({d}, {2, 2});
    REQUIRE(g.size() == 4);
    // First dimension atoms: 0.5, 1.0; second: 11, 12.
    CHECK(g.atoms(0, 0) == doctest::Approx(0.5));
    CHECK(g.atoms(0, 1) == doctest::Approx(11.0));
    CHECK(g.atoms(1, 0) == doctest::Approx(0.5));
    CHECK(g.atoms(1, 1) == doctest::Approx(12.0));
    CHECK(g.atoms(2, 0) == doctest::Approx(1.0));
    CHECK(g.atoms(2, 1) == doctest::Approx(11.0));
    CHECK(g.atoms(3, 0) == doctest::Approx(1.0));
    CHECK(g.atoms(3, 1) == doctest::Approx(12.0));
}

TEST_CASE("degenerate dimensions collapse to a single atom") {
    Matrix d(3, 2);
    d << 4, 0, 4, 1, 4, 2;  // first dimension constant
    Grid g = build_grid({d}, 0.5);
    CHECK(g.counts[0] == 1);
    CHECK(g.counts[1] == 4);
    for (long i = 0; i < g.size(); ++i) CHECK(g.atoms(i, 0) == doctest::Approx(4.0));
}

TEST_CASE("default mesh is one fortieth of the largest pooled range") {
    Matrix d(2, 2);
    d << 0, 0, 2, 10;
    CHECK(default_mesh({d}) == doctest::Approx(10.0 / 40.0));
}

TEST_CASE("atom cap rejects oversized grids") {
    Matrix d(2, 2);
    d << 0, 0, 1, 1;
    CHECK_THROWS_AS(build_grid({d}, 1e-4), validation_error);        // 10^8 atoms
    CHECK_THROWS_AS(build_grid_counts({d}, {200, 200}), validation_error);
    CHECK_NOTHROW(build_grid_counts({d}, {100, 100}));               // exactly at cap
}

TEST_CASE("grid construction validates inputs") {
    Matrix d(2, 1);
    d << 0, 1;
    CHECK_THROWS_AS(build_grid({d}, 0.0), validation_error);
    CHECK_THROWS_AS(build_grid({d}, -1.0), validation_error);
    CHECK_THROWS_AS(build_grid({}, 0.5), validation_error);
    Matrix bad(1, 1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(build_grid({bad}, 0.5), validation_error);
    Matrix other(1, 2);
    other << 0, 1;
    CHECK_THROWS_AS(build_grid({d, other}, 0.5), validation_error);  // dimension mismatch
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "mdma/error.hpp"
#include "mdma/topology.hpp"

using namespace mdma;

TEST_CASE("source to destination distance at the default coordinates") {
    const Setup s = default_paper_setup();
    CHECK(distance(s.topology.s1, s.topology.d) == doctest::Approx(std::hypot(80.0, 20.0)).epsilon(1e-15));
    CHECK(distance(s.topology.s1, s.topology.d) == doctest::Approx(82.4621).epsilon(1e-6));
}

TEST_CASE("default relay column") {
    const Setup s = default_paper_setup();
    REQUIRE(s.topology.relay_count() == 8);
    CHECK(s.topology.relays[0].x == 50.0);
    CHECK(s.topology.relays[0].y == doctest::Approx(48.75));
    CHECK(s.topology.relays[7].y == doctest::Approx(50.0 - 100.0 * 7.5 / 8.0 + 5.0));
    const auto col = column_relays(3);
    CHECK(col[1].y == doctest::Approx(50.0 - 100.0 * 1.5 / 3.0 + 5.0));
}

TEST_CASE("default threshold and slot counts") {
    const Setup s = default_paper_setup();
    CHECK(s.config.gamma_th() == 1.0);
    CHECK(s.config.beta_s() == 5);
    CHECK(s.config.beta_p() == 5);
    CHECK(s.config.snr_linear() == doctest::Approx(1e6));
}

TEST_CASE("ceiling ignores floating noise") {
    SystemConfig c;
    c.eta = 0.7;
    CHECK(c.beta_s() == 7);
    CHECK(c.beta_p() == 3);
    c.eta = 0.3;
    CHECK(c.beta_s() == 3);
    CHECK(c.beta_p() == 7);
    CHECK(robust_ceil(2.5) == 3);
    CHECK(robust_ceil(3.0) == 3);
    CHECK(robust_ceil(3.0000001) == 4);
}

TEST_CASE("slot counts stay within one of the undivided payload") {
    for (double r0 : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        for (double bits : {1.0, 7.0, 10.0, 33.0}) {
            for (int k = 0; k <= 20; ++k) {
                SystemConfig c;
                c.rate_r0 = r0;
                c.total_bits = bits;
                c.eta = k / 20.0;
                const int whole = static_cast<int>(std::ceil(bits / r0 - 1e-9));
                const int sum = c.beta_s() + c.beta_p();
                CHECK((sum == whole || sum == whole + 1));
            }
        }
    }
}

TEST_CASE("threshold increases with the rate target") {
    SystemConfig c;
    double last = -1.0;
    for (double r = 0.0; r <= 4.0; r += 0.25) {
        c.rate_r0 = r;
        CHECK(c.gamma_th() > last);
        last = c.gamma_th();
    }
}

TEST_CASE("distances are symmetric") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 200; ++i) {
        const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
        CHECK(distance(a, b) == distance(b, a));
    }
}

TEST_CASE("link rate scales as distance to the power alpha") {
    for (double alpha : {2.0, 3.0, 3.7}) {
        const double snr = 1234.5;
        for (double d : {1.0, 7.5, 40.0}) {
            const double r1 = LinkParam::from_distance(d, alpha, snr).rate_lambda;
            const double r2 = LinkParam::from_distance(2.0 * d, alpha, snr).rate_lambda;
            CHECK(r2 / r1 == doctest::Approx(std::pow(2.0, alpha)).epsilon(1e-14));
        }
    }
    CHECK(LinkParam::from_distance(10.0, 3.0, 1e3).mean_snr() == doctest::Approx(1.0));
}

TEST_CASE("noiseless limit gives zero rates") {
    Setup s = default_paper_setup();
    s.config.noise_dbm = -std::numeric_limits<double>::infinity();
    const LinkRates r = link_rates(s.topology, s.config);
    CHECK(r.s1d.rate_lambda == 0.0);
    for (const auto& l : r.rd) CHECK(l.rate_lambda == 0.0);
}

TEST_CASE("degenerate geometry is rejected") {
    Setup s = default_paper_setup();
    s.topology.relays[2] = s.topology.d;
    CHECK_THROWS_AS(s.topology.validate(), GeometryError);
    CHECK_THROWS_AS(distances(s.topology), GeometryError);

    s = default_paper_setup();
    s.topology.s1 = s.topology.d;
    CHECK_THROWS_AS(s.topology.validate(), GeometryError);

    s = default_paper_setup();
    s.topology.relays.clear();
    CHECK_THROWS_AS(s.topology.validate(), GeometryError);

    s = default_paper_setup();
    s.topology.alpha = 0.0;
    CHECK_THROWS_AS(s.topology.validate(), GeometryError);

    s = default_paper_setup();
    s.topology.relays[0].x = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(s.topology.validate(), GeometryError);
}

TEST_CASE("config validation") {
    SystemConfig c;
    c.eta = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.granularity = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.eta = 0.0;
    CHECK_NOTHROW(c.validate());
    CHECK(c.beta_s() == 0);
    CHECK(c.beta_p() == 10);
    c.eta = 1.0;
    CHECK(c.beta_s() == 10);
    CHECK(c.beta_p() == 0);
}

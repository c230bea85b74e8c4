#include "uwbsim/ranging.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace uwbsim;

namespace {

// Arithmetic oracle: synthesize the six stamps for a symmetric geometry with
// per-node clock drift, mirroring the protocol timing definitions.
struct StampOracle {
    double tofPs;        // one-way flight
    double t1Ps;         // responder local turnaround
    double t2Ps;         // initiator local poll->final
    double initiatorPpm;
    double responderPpm;

    RangingRecord make() const {
        const double di = initiatorPpm * 1e-6;
        const double dr = responderPpm * 1e-6;
        // Global event times.
        const double pollTxG = 1e9;
        const double pollRxG = pollTxG + tofPs;
        const double responseTxG = pollRxG + t1Ps / (1.0 + dr);
        const double responseRxG = responseTxG + tofPs;
        const double finalTxG = pollTxG + t2Ps / (1.0 + di);
        const double finalRxG = finalTxG + tofPs;
        auto localI = [&](double g) { return static_cast<TimePs>(std::llround(g * (1.0 + di))); };
        auto localR = [&](double g) { return static_cast<TimePs>(std::llround(g * (1.0 + dr))); };
        RangingRecord r;
        r.pollTx = localI(pollTxG);
        r.pollRx = localR(pollRxG);
        r.responseTx = localR(responseTxG);
        r.responseRx = localI(responseRxG);
        r.finalTx = localI(finalTxG);
        r.finalRx = localR(finalRxG);
        r.status = SessionStatus::Completed;
        return r;
    }
};

} // namespace

TEST_CASE("distance_ss_twr: basic arithmetic") {
    SUBCASE("round trip equal to the reply delay means zero time of flight") {
        CHECK(ranging::distance_ss_twr(100, 300, 1000, 800) == doctest::Approx(0.0));
    }
    SUBCASE("round-trip excess of 2 x 3336 ps gives ~1 m") {
        // Oracle: d = c * 3336 ps; stamps from tof=3336 ps, reply 800 us.
        const double expected = 3336.0 / kPsPerMeter;
        const auto d = ranging::distance_ss_twr(0, 3336, 803336, 806672);
        REQUIRE(d.has_value());
        CHECK(*d == doctest::Approx(expected).epsilon(1e-9));
        CHECK(*d == doctest::Approx(1.0003).epsilon(1e-3)); // ~1 m
    }
    SUBCASE("negative time of flight flags the record invalid") {
        CHECK_FALSE(ranging::distance_ss_twr(0, 5000, 805000, 799000).has_value());
    }
}

TEST_CASE("drift: SS-TWR absorbs the reply-delay error, DS-TWR cancels it") {
    const double tofPs = 1.0 * kPsPerMeter; // 1 m
    // 20 ppm responder drift (slow clock: the estimate overshoots and stays
    // measurable; the opposite sign pushes the estimate negative, which the
    // formula flags as an invalid record).
    StampOracle oracle{tofPs, 800e6, 1600e6, 0.0, -20.0};

    const auto rec = oracle.make();
    const auto ss = ranging::distance_ss_twr(*rec.pollTx, *rec.pollRx, *rec.responseTx, *rec.responseRx);
    REQUIRE(ss.has_value());
    // Expected SS error ~ c * (20e-6 * 800us) / 2 = 2.4 m.
    const double expectedError = 0.5 * 20e-6 * 800e6 / kPsPerMeter;
    CHECK(expectedError == doctest::Approx(2.4).epsilon(0.01));
    CHECK(std::abs(*ss - 1.0) == doctest::Approx(expectedError).epsilon(0.01));

    const auto ds = ranging::distance_ds_twr(rec);
    REQUIRE(ds.has_value());
    CHECK(std::abs(*ds - 1.0) < 0.05);

    StampOracle fastResponder{tofPs, 800e6, 1600e6, 0.0, 20.0};
    CHECK_FALSE(ranging::distance_ss_twr(*fastResponder.make().pollTx, *fastResponder.make().pollRx,
                                         *fastResponder.make().responseTx,
                                         *fastResponder.make().responseRx)
                    .has_value());
}

TEST_CASE("distance_ds_twr: substitution cases") {
    SUBCASE("symmetric ToF with no drift returns c*tof") {
        StampOracle oracle{3336.0, 800e6, 1600e6, 0.0, 0.0};
        const auto d = ranging::distance_ds_twr(oracle.make());
        REQUIRE(d.has_value());
        CHECK(*d == doctest::Approx(3336.0 / kPsPerMeter).epsilon(1e-6));
    }
    SUBCASE("all stamps equal gives zero") {
        RangingRecord r;
        r.pollTx = r.pollRx = r.responseTx = r.responseRx = r.finalTx = r.finalRx = 1000;
        r.status = SessionStatus::Completed;
        CHECK(ranging::distance_ds_twr(r) == doctest::Approx(0.0));
    }
    SUBCASE("missing final stamps is a precondition error") {
        RangingRecord r;
        r.pollTx = 0;
        r.pollRx = 10;
        r.responseTx = 20;
        r.responseRx = 30;
        CHECK_THROWS_AS(ranging::distance_ds_twr(r), std::logic_error);
    }
}

TEST_CASE("drift comparison property: DS beats SS on random symmetric drifts") {
    int dsWins = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const double di = -20.0 + 40.0 * ((t * 7919) % 101) / 100.0;
        const double dr = -20.0 + 40.0 * ((t * 104729) % 101) / 100.0;
        StampOracle oracle{1.5 * kPsPerMeter, 800e6, 1600e6, di, dr};
        const auto rec = oracle.make();
        const auto ss =
            ranging::distance_ss_twr(*rec.pollTx, *rec.pollRx, *rec.responseTx, *rec.responseRx);
        const auto ds = ranging::distance_ds_twr(rec);
        REQUIRE(ds.has_value());
        // An SS estimate pushed negative counts as unbounded error.
        const double ssErr = ss ? std::abs(*ss - 1.5) : 1e9;
        if (std::abs(*ds - 1.5) <= ssErr) ++dsWins;
    }
    CHECK(static_cast<double>(dsWins) / trials >= 0.99);
}

TEST_CASE("schedule validation") {
    SessionSchedule s;
    s.packetDurationUs = 90.0;
    CHECK_NOTHROW(s.validate());
    s.randomJitterBoundUs = 45.0; // below the packet duration
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.randomJitterBoundUs = 90.0;
    CHECK_NOTHROW(s.validate());
    s = SessionSchedule{};
    s.pollToFinalUs = 700.0; // t2 < t1
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("jitter distribution: magnitude within [t0, bound], both signs appear") {
    SessionSchedule s;
    s.packetDurationUs = 90.0;
    s.randomJitterBoundUs = 360.0;
    int positive = 0, negative = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
        const TimeDeltaPs j = ranging::jitter_draw(s, 42, 0, i);
        const double us = std::abs(static_cast<double>(j)) * 1e-6;
        CHECK(us >= 90.0 - 1e-6);
        CHECK(us <= 360.0 + 1e-6);
        (j > 0 ? positive : negative)++;
    }
    CHECK(positive > 100);
    CHECK(negative > 100);
    CHECK(ranging::jitter_draw(s, 42, 0, 7) == ranging::jitter_draw(s, 42, 0, 7));
    s.randomJitterBoundUs = 0.0;
    CHECK(ranging::jitter_draw(s, 42, 0, 7) == 0);
}

TEST_CASE("clock model") {
    ClockModel c{100.1, 0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ClockModel{20.0, 500};
    CHECK(c.to_local(0) == 500);
    CHECK(c.to_local(1'000'000'000'000ULL) == 1'000'020'000'500ULL);
    CHECK(c.local_delta_to_global(1'000'020'000) == doctest::Approx(1'000'000'000).epsilon(1e-9));
}

TEST_CASE("record ordering validation") {
    RangingRecord r;
    r.pollTx = 100;
    r.pollRx = 200;
    r.responseTx = 300;
    CHECK(r.validate_ordering());
    r.responseTx = 150; // out of order
    CHECK_FALSE(r.validate_ordering());
}

TEST_CASE("stale_data_policy") {
    auto mk = [](TimePs t, double dist, SessionStatus st) {
        RangingRecord r;
        r.pollTx = t;
        r.responseRx = t + 1000;
        r.status = st;
        if (st == SessionStatus::Completed) r.distanceM = dist;
        return r;
    };
    const TimePs sec = 1'000'000'000'000ULL;

    SUBCASE("fresh close success grants access") {
        std::vector<RangingRecord> h{mk(40 * sec, 2.0, SessionStatus::Completed)};
        CHECK(ranging::stale_data_policy(h, 50 * sec, 30.0, 5.0) == ranging::AccessDecision::Granted);
    }
    SUBCASE("expired success denies access") {
        std::vector<RangingRecord> h{mk(10 * sec, 2.0, SessionStatus::Completed)};
        CHECK(ranging::stale_data_policy(h, 50 * sec, 30.0, 5.0) == ranging::AccessDecision::Denied);
    }
    SUBCASE("distance beyond the proximity radius denies access") {
        std::vector<RangingRecord> h{mk(45 * sec, 9.0, SessionStatus::Completed)};
        CHECK(ranging::stale_data_policy(h, 50 * sec, 30.0, 5.0) == ranging::AccessDecision::Denied);
    }
    SUBCASE("continuous jamming: granted until the expiry, denied after") {
        // Last success at t=0, jam from there on (drops never update distance).
        std::vector<RangingRecord> h{mk(0, 2.0, SessionStatus::Completed)};
        for (int s = 1; s <= 720; ++s) h.push_back(mk(s * sec / 6, 0, SessionStatus::DroppedResponse));
        CHECK(ranging::stale_data_policy(h, 119 * sec, 120.0, 5.0) == ranging::AccessDecision::Granted);
        CHECK(ranging::stale_data_policy(h, 121 * sec, 120.0, 5.0) == ranging::AccessDecision::Denied);
    }
    SUBCASE("empty history denies access") {
        CHECK(ranging::stale_data_policy({}, 50 * sec, 30.0, 5.0) == ranging::AccessDecision::Denied);
        CHECK_THROWS_AS(ranging::stale_data_policy({}, 0, -1.0, 5.0), std::invalid_argument);
    }
}

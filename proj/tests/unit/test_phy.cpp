#include "uwbsim/phy.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

using namespace uwbsim;

namespace {

// Reference cyclic cross-correlation, written independently of the library
// implementation: plain double loop over all lags.
double reference_max_cyclic_ncc(const TernaryCode& a, const TernaryCode& b, bool skipZeroLag) {
    const int n = a.length();
    double pa = 0, pb = 0;
    for (auto s : a.symbols) pa += s * s;
    for (auto s : b.symbols) pb += s * s;
    double best = 0;
    for (int lag = 0; lag < n; ++lag) {
        if (skipZeroLag && lag == 0) continue;
        double r = 0;
        for (int i = 0; i < n; ++i) r += a.symbols[i] * b.symbols[(i + lag) % n];
        best = std::max(best, std::abs(r) / std::sqrt(pa * pb));
    }
    return best;
}

} // namespace

TEST_CASE("preamble code table: size, determinism, identity peak") {
    const auto& table = preamble_code_table();
    CHECK(table.size() >= 16);
    const auto& c9 = preamble_code(9);
    CHECK(c9.index == 9);
    CHECK(c9.symbols == preamble_code(9).symbols); // deterministic lookup

    // Identity: zero-lag normalized correlation is exactly 1.
    double p = 0, r = 0;
    for (auto s : c9.symbols) {
        p += s * s;
        r += s * s;
    }
    CHECK(r / std::sqrt(p * p) == doctest::Approx(1.0));
}

TEST_CASE("preamble codes: pairwise cross-correlation bounded by 0.3 (exhaustive lag sweep)") {
    const auto& table = preamble_code_table();
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = i; j < table.size(); ++j) {
            if (i == j) continue;
            const double ncc = reference_max_cyclic_ncc(table[i], table[j], false);
            CAPTURE(table[i].index);
            CAPTURE(table[j].index);
            CHECK(ncc <= 0.3);
        }
    }
    // Spot check the pair the attack narrative uses.
    CHECK(reference_max_cyclic_ncc(preamble_code(9), preamble_code(12), false) <= 0.3);
}

TEST_CASE("preamble code: unknown index raises a domain error") {
    CHECK_THROWS_AS(preamble_code(999), std::domain_error);
    CHECK_THROWS_AS(preamble_code(0), std::domain_error);
}

TEST_CASE("code table file round trip and substitution") {
    const std::string path = "codes_roundtrip.txt";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f);
        // 16 entries keeps the self-test happy: reuse the built-in table.
        for (const auto& code : preamble_code_table())
            std::fprintf(f, "%s\n", format_code_line(code).c_str());
        std::fclose(f);
    }
    CHECK(load_code_table_file(path) == 16);
    CHECK(preamble_code(9).length() == 64);
    reset_code_table();
    std::remove(path.c_str());

    const TernaryCode parsed = parse_code_line("3: +0-+");
    CHECK(parsed.index == 3);
    CHECK(parsed.symbols == std::vector<std::int8_t>{1, 0, -1, 1});
}

TEST_CASE("build_sync: repetition arithmetic") {
    TernaryCode code31;
    code31.index = 99;
    for (int i = 0; i < 31; ++i) code31.symbols.push_back((i % 3 == 0) ? 1 : ((i % 3 == 1) ? -1 : 0));

    SUBCASE("length 31 code, preamble length 62 gives exactly 2 repetitions") {
        const auto chips = phy::build_sync(code31, 62);
        CHECK(chips.size() == 62u * kChipsPerSymbol);
        // Second repetition equals the first.
        for (std::size_t i = 0; i < 31u * kChipsPerSymbol; ++i)
            CHECK(chips[i] == chips[i + 31u * kChipsPerSymbol]);
    }
    SUBCASE("non-multiple preamble length is rejected") {
        CHECK_THROWS_AS(phy::build_sync(code31, 63), std::invalid_argument);
    }
}

TEST_CASE("build_sync: autocorrelation has periodic peaks at code-period multiples") {
    const auto cfg = testutil::default_config();
    const auto chips = phy::build_sync(cfg);
    const auto& code = preamble_code(cfg.preambleCodeIndex);
    const std::int64_t period = static_cast<std::int64_t>(code.length()) * kChipsPerSymbol;

    // Direct correlation oracle: r(tau) = sum chips[i]*chips[i+tau] without
    // normalization tricks.
    auto corr_at = [&](std::int64_t tau) {
        double r = 0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(tau) < chips.size(); ++i)
            r += chips[i] * chips[i + static_cast<std::size_t>(tau)];
        return r;
    };
    const double peak0 = corr_at(0);
    for (int k = 1; k <= 3; ++k) {
        const double atPeriod = corr_at(k * period);
        const double expected = peak0 * (1.0 - static_cast<double>(k) * code.length() /
                                                   cfg.preambleLengthSymbols);
        CHECK(atPeriod == doctest::Approx(expected).epsilon(1e-9));
        // Between-period lags stay well below the periodic peaks.
        CHECK(std::abs(corr_at(k * period - 8)) < 0.5 * atPeriod);
    }
}

TEST_CASE("build_sts: determinism and length") {
    const auto cfg = testutil::default_config();
    const auto a = phy::sts_symbols(testutil::test_sts(), 64);
    const auto b = phy::sts_symbols(testutil::test_sts(), 64);
    CHECK(a == b);
    CHECK(a.size() == 64);
    for (auto s : a) CHECK((s == 1 || s == -1));

    PacketConfig off = cfg;
    off.stsMode = StsMode::Off;
    CHECK_THROWS_AS(phy::build_sts(testutil::test_sts(), off), std::logic_error);
}

TEST_CASE("build_sts: different keys decorrelate (NCC peak < 0.2 at length 512)") {
    // Correlation oracle over a fixed seed set: max linear NCC over all lags.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        StsContext a{StsKey{seed, 0x1}, 0};
        StsContext b{StsKey{seed, 0x2}, 0};
        const auto sa = phy::sts_symbols(a, 512);
        const auto sb = phy::sts_symbols(b, 512);
        double best = 0;
        for (int lag = -511; lag < 512; ++lag) {
            double r = 0;
            for (int i = 0; i < 512; ++i) {
                const int j = i + lag;
                if (j >= 0 && j < 512) r += sa[static_cast<std::size_t>(i)] * sb[static_cast<std::size_t>(j)];
            }
            best = std::max(best, std::abs(r) / 512.0);
        }
        CAPTURE(seed);
        CHECK(best < 0.2);
    }
}

TEST_CASE("build_sts: sequence does not repeat within a packet") {
    const auto s = phy::sts_symbols(testutil::test_sts(), 2048);
    for (int period = 1; period <= 1024; ++period) {
        bool repeats = true;
        for (int i = 0; i + period < 2048; ++i) {
            if (s[static_cast<std::size_t>(i)] != s[static_cast<std::size_t>(i + period)]) {
                repeats = false;
                break;
            }
        }
        CHECK_FALSE(repeats);
    }
}

TEST_CASE("build_sfd: per-type determinism and separation") {
    auto cfg = testutil::default_config();
    const auto s0 = phy::build_sfd(cfg);
    CHECK(s0 == phy::build_sfd(cfg));
    cfg.sfdType = 1;
    CHECK(s0 != phy::build_sfd(cfg));

    // Distinct patterns: normalized linear correlation peak < 0.5.
    const auto& table = sfd_pattern_table();
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = i + 1; j < table.size(); ++j) {
            const auto& a = table[i];
            const auto& b = table[j];
            double best = 0;
            const int n = static_cast<int>(a.size());
            for (int lag = -(n - 1); lag < n; ++lag) {
                double r = 0;
                for (int x = 0; x < n; ++x) {
                    const int y = x + lag;
                    if (y >= 0 && y < n) r += a[static_cast<std::size_t>(x)] * b[static_cast<std::size_t>(y)];
                }
                best = std::max(best, std::abs(r) / n);
            }
            CHECK(best < 0.5);
        }
    }
}

TEST_CASE("build_phd_payload: empty payload keeps the header, drops the payload span") {
    const auto cfg = testutil::default_config();
    const auto layout = phy::field_layout(cfg, 0, false);
    CHECK(layout.hasField("PHD"));
    CHECK(layout.spanEnd("PHD") - layout.spanStart("PHD") ==
          phy::kPhdHeaderBits * phy::kSymbolsPerDataBit * kChipsPerSymbol);
    CHECK(layout.spanEnd("PAYLOAD") == layout.spanStart("PAYLOAD")); // zero length

    const auto chips = phy::build_phd_payload(cfg, {});
    CHECK(chips.size() ==
          static_cast<std::size_t>(phy::kPhdHeaderBits * phy::kSymbolsPerDataBit * kChipsPerSymbol));
}

TEST_CASE("assemble_packet: field power scaling and duration accounting") {
    const auto cfg = testutil::default_config();
    const auto payload = testutil::test_payload();

    SUBCASE("all-unity profile leaves every field at nominal power") {
        const auto pkt = phy::assemble_packet(cfg, testutil::test_sts(), payload, PowerProfile{}, false);
        for (const char* field : {"SYNC", "SFD", "STS", "PHD", "PAYLOAD"}) {
            CHECK(pkt.fieldMeanSquarePower(field) ==
                  doctest::Approx(phy::nominal_field_power(cfg, field)).epsilon(1e-9));
        }
    }
    SUBCASE("SYNC amplitude gain 3 scales SYNC power by 9, others unchanged") {
        const auto pkt =
            phy::assemble_packet(cfg, testutil::test_sts(), payload, PowerProfile::jam_sync(3.0), false);
        CHECK(pkt.fieldMeanSquarePower("SYNC") ==
              doctest::Approx(9.0 * phy::nominal_field_power(cfg, "SYNC")).epsilon(1e-9));
        CHECK(pkt.fieldMeanSquarePower("STS") ==
              doctest::Approx(phy::nominal_field_power(cfg, "STS")).epsilon(1e-9));
        CHECK(pkt.fieldMeanSquarePower("PAYLOAD") ==
              doctest::Approx(phy::nominal_field_power(cfg, "PAYLOAD")).epsilon(1e-9));
    }
    SUBCASE("omitPhdPayload keeps only SYNC+SFD+STS") {
        const auto pkt = phy::assemble_packet(cfg, testutil::test_sts(), payload, PowerProfile{}, true);
        const std::int64_t expected =
            static_cast<std::int64_t>(cfg.preambleLengthSymbols + 16 + cfg.stsLengthSymbols) *
            kChipsPerSymbol;
        CHECK(pkt.lengthChips() == expected);
        CHECK(pkt.fieldBoundaries.size() == 3);
    }
    SUBCASE("packet duration equals the sum of the field spans exactly") {
        const auto pkt = phy::assemble_packet(cfg, testutil::test_sts(), payload, PowerProfile{}, false);
        std::int64_t sum = 0;
        std::int64_t cursor = 0;
        for (const auto& span : pkt.fieldBoundaries) {
            CHECK(span.startChip == cursor); // contiguous and ordered
            sum += span.endChip - span.startChip;
            cursor = span.endChip;
        }
        CHECK(sum == pkt.lengthChips());
    }
    SUBCASE("rebuilding with identical inputs is bit-identical") {
        const auto a = phy::assemble_packet(cfg, testutil::test_sts(), payload, PowerProfile{}, false);
        const auto b = phy::assemble_packet(cfg, testutil::test_sts(), payload, PowerProfile{}, false);
        CHECK(a.samples == b.samples);
    }
}

TEST_CASE("SYNC average power sits strictly below STS average power at equal gain") {
    for (int idx : default_domains().codeIndices) {
        PacketConfig cfg = testutil::default_config();
        cfg.preambleCodeIndex = idx;
        CHECK(phy::nominal_field_power(cfg, "SYNC") < phy::nominal_field_power(cfg, "STS"));
    }
}

TEST_CASE("configuration domains: product exceeds 100k by enumeration, staged sums stay small") {
    const auto& d = default_domains();
    // Enumeration oracle, independent of the attacker module's counting.
    std::uint64_t product = 0;
    for (int ch : d.channels)
        for (int pac : d.pacs)
            for (int code : d.codeIndices)
                for (int plen : d.preambleLengths)
                    for (int sfd : d.sfdTypes)
                        for (StsMode mode : d.stsModes)
                            for (int sl : d.stsLengths)
                                for (int phd : d.phdProfiles) {
                                    (void)ch; (void)pac; (void)code; (void)plen;
                                    (void)sfd; (void)mode; (void)sl; (void)phd;
                                    ++product;
                                }
    CHECK(product == 516096);
    CHECK(product > 100000);

    // Every combination in the product is a valid configuration.
    PacketConfig probe;
    for (int pac : d.pacs)
        for (int plen : d.preambleLengths) {
            probe = testutil::default_config();
            probe.pacSymbols = pac;
            probe.preambleLengthSymbols = plen;
            CHECK(config_is_valid(probe));
        }
}

TEST_CASE("config validation rejects out-of-domain values") {
    auto cfg = testutil::default_config();
    cfg.preambleLengthSymbols = 62; // not an option
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
    cfg = testutil::default_config();
    cfg.channel = 7;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
}

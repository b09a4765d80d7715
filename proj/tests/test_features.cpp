#include "seasonal/error.hpp"
#include "seasonal/features.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace seasonal;
using testutil::ymd;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

std::vector<std::uint64_t> random_counts(std::mt19937_64& rng, int span) {
    std::uniform_int_distribution<std::uint64_t> c(0, 1000);
    std::bernoulli_distribution zero(0.3);
    std::vector<std::uint64_t> v(static_cast<std::size_t>(span));
    for (auto& x : v) {
        x = zero(rng) ? 0 : c(rng);
    }
    return v;
}

} // namespace

TEST_CASE("calendar parsing is strict") {
    CHECK(parse_date("2012-02-29") == ymd(2012, 2, 29));
    CHECK_FALSE(parse_date("2013-02-29"));
    CHECK_FALSE(parse_date("2012-2-29"));
    CHECK_FALSE(parse_date("2012-02-29x"));
    CHECK(format_date(ymd(2013, 1, 6)) == "2013-01-06");
    CHECK(parse_month_day("02-29").has_value());
    CHECK_FALSE(parse_month_day("02-30"));
    CHECK_FALSE(parse_month_day("13-01"));
    const auto ts = parse_timestamp("2012-12-25 08:00:01");
    REQUIRE(ts);
    CHECK(ts->seconds_of_day == 8 * 3600 + 1);
    CHECK(format_timestamp(*parse_timestamp("2012-12-25T08:00:01")) == "2012-12-25T08:00:01");
    CHECK_FALSE(parse_timestamp("2012-12-25T08:60:00"));
}

TEST_CASE("window_days examples") {
    auto days = window_days(WindowSpec{}, 2012);
    REQUIRE(days.size() == 15);
    CHECK(days.front() == ymd(2012, 12, 18));
    CHECK(days.back() == ymd(2013, 1, 1));

    WindowSpec july{MonthDay{7, 4}, 1, {2012}};
    days = window_days(july, 2012);
    REQUIRE(days.size() == 1);
    CHECK(days[0] == ymd(2012, 7, 4));

    WindowSpec jan{MonthDay{1, 3}, 7, {2013}};
    days = window_days(jan, 2013);
    REQUIRE(days.size() == 7);
    CHECK(days.front() == ymd(2012, 12, 31));
    CHECK(days.back() == ymd(2013, 1, 6));
}

TEST_CASE("leap-day anchor only exists in leap years") {
    WindowSpec leap{MonthDay{2, 29}, 3, {2012}};
    CHECK(window_days(leap, 2012)[1] == ymd(2012, 2, 29));
    CHECK(code_of([&] { window_days(leap, 2013); }) == ErrorCode::InvalidAnchor);
}

TEST_CASE("window validation") {
    auto invalid = [](WindowSpec w) { return code_of([&] { w.validate(); }) == ErrorCode::InvalidWindow; };
    CHECK(invalid(WindowSpec{MonthDay{12, 25}, 14, {2012}}));
    CHECK(invalid(WindowSpec{MonthDay{12, 25}, 0, {2012}}));
    CHECK(invalid(WindowSpec{MonthDay{12, 25}, -3, {2012}}));
    CHECK(invalid(WindowSpec{MonthDay{12, 25}, 15, {}}));
    CHECK(invalid(WindowSpec{MonthDay{12, 25}, 15, {2013, 2012}}));
    CHECK(invalid(WindowSpec{MonthDay{12, 25}, 15, {2012, 2012}}));
    CHECK_NOTHROW(WindowSpec{}.validate());
}

TEST_CASE("window spec text round trip") {
    WindowSpec w{MonthDay{1, 3}, 7, {2012, 2013, 2015}};
    CHECK(w.to_string() == "01-03,7,2012;2013;2015");
    CHECK(WindowSpec::parse(w.to_string()) == w);
    CHECK(code_of([] { WindowSpec::parse("12-25,15"); }) != ErrorCode::Io);
}

TEST_CASE("window_days returns span consecutive days with the anchor in the middle") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> month(1, 12), day(1, 28), half(0, 40), year(1990, 2030);
    for (int i = 0; i < 500; ++i) {
        WindowSpec w{MonthDay{static_cast<unsigned>(month(rng)), static_cast<unsigned>(day(rng))},
                     2 * half(rng) + 1, {year(rng)}};
        const auto days = window_days(w, w.years[0]);
        REQUIRE(days.size() == static_cast<std::size_t>(w.span));
        for (std::size_t j = 1; j < days.size(); ++j) {
            CHECK(day_number(days[j]) == day_number(days[j - 1]) + 1);
        }
        const auto mid = days[static_cast<std::size_t>(w.half_width())];
        CHECK(static_cast<unsigned>(mid.month()) == w.anchor.month);
        CHECK(static_cast<unsigned>(mid.day()) == w.anchor.day);
        CHECK(static_cast<int>(mid.year()) == w.years[0]);
    }
}

TEST_CASE("compute_rates examples") {
    std::vector<std::uint64_t> peak(15, 0);
    peak[7] = 30;
    auto r = compute_rates(peak);
    REQUIRE(r);
    for (int j = 0; j < 15; ++j) {
        CHECK((*r)[j] == (j == 7 ? 1.0 : 0.0));
    }

    r = compute_rates(std::vector<std::uint64_t>(15, 1));
    REQUIRE(r);
    for (double x : *r) {
        CHECK(x == 1.0 / 15.0);
    }

    std::vector<std::uint64_t> two(15, 0);
    two[0] = 2;
    two[14] = 8;
    r = compute_rates(two);
    REQUIRE(r);
    CHECK((*r)[0] == 0.2);
    CHECK((*r)[14] == 0.8);
    CHECK(std::accumulate(r->begin() + 1, r->end() - 1, 0.0) == 0.0);

    CHECK_FALSE(compute_rates(std::vector<std::uint64_t>(15, 0)));
}

TEST_CASE("rates lie on the simplex and ignore popularity") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::uint64_t> scale(1, 100000);
    for (int i = 0; i < 1000; ++i) {
        const auto c = random_counts(rng, 15);
        const auto r = compute_rates(c);
        if (!r) {
            continue;
        }
        double sum = 0;
        for (double x : *r) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        const auto m = scale(rng);
        auto scaled = c;
        for (auto& x : scaled) {
            x *= m;
        }
        const auto rs = compute_rates(scaled);
        REQUIRE(rs);
        for (std::size_t j = 0; j < r->size(); ++j) {
            CHECK(std::abs((*rs)[j] - (*r)[j]) <= 1e-12);
        }
    }
}

TEST_CASE("permuting counts permutes rates") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        auto c = random_counts(rng, 15);
        c[0] += 1;
        std::vector<std::size_t> perm(15);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::uint64_t> pc(15);
        for (std::size_t j = 0; j < 15; ++j) {
            pc[j] = c[perm[j]];
        }
        const auto r = *compute_rates(c);
        const auto pr = *compute_rates(pc);
        for (std::size_t j = 0; j < 15; ++j) {
            CHECK(pr[j] == r[perm[j]]);
        }
    }
}

TEST_CASE("build_dataset examples") {
    TrackCountTable t(WindowSpec{});
    t.add_listen("in", 7);
    t.add_listen("out", std::nullopt);
    t.add_listen("nolabel", 3);
    LabelSet labels;
    labels.universe = {"in", "out"};
    labels.positives = {"in"};
    const auto ds = build_dataset(t, labels);
    REQUIRE(ds.rows.size() == 1);
    CHECK(ds.rows[0].track_id == "in");
    CHECK(ds.rows[0].label);
    CHECK(ds.excluded_undefined == 1);
    CHECK(ds.excluded_unlabeled == 1);
    CHECK(ds.positive_count() == 1);
}

TEST_CASE("build_dataset rejects a mismatched window") {
    TrackCountTable t(WindowSpec{});
    WindowSpec other{MonthDay{12, 24}, 15, {2012}};
    CHECK(code_of([&] { build_dataset(t, LabelSet{}, other); }) == ErrorCode::WindowMismatch);
    CHECK_NOTHROW(build_dataset(t, LabelSet{}, WindowSpec{}));
}

TEST_CASE("build_dataset row count matches a linear scan") {
    const auto rs = testutil::random_records(20000, 2000, 13);
    const auto table = aggregate(rs, WindowSpec{}).table;
    LabelSet labels;
    std::mt19937_64 rng(2);
    std::bernoulli_distribution known(0.8), pos(0.1);
    for (const auto& [id, c] : table.rows()) {
        if (known(rng)) {
            labels.universe.insert(id);
            if (pos(rng)) {
                labels.positives.insert(id);
            }
        }
    }
    std::size_t expected = 0;
    for (const auto& [id, c] : table.rows()) {
        expected += labels.contains(id) && c.window_listens() > 0 ? 1 : 0;
    }
    const auto ds = build_dataset(table, labels);
    CHECK(ds.rows.size() == expected);
    CHECK(ds.rows.size() + ds.excluded_undefined + ds.excluded_unlabeled == table.size());
    for (std::size_t i = 1; i < ds.rows.size(); ++i) {
        CHECK(ds.rows[i - 1].track_id < ds.rows[i].track_id);
    }
    for (const auto& row : ds.rows) {
        CHECK(row.label == labels.is_positive(row.track_id));
        CHECK(row.rates.size() == 15);
    }
}

TEST_CASE("feature dump round trips rates bit-exactly") {
    const auto rs = testutil::random_records(5000, 300, 6);
    const auto table = aggregate(rs, WindowSpec{}).table;
    LabelSet labels;
    for (const auto& [id, c] : table.rows()) {
        labels.universe.insert(id);
        if (id.size() % 2 == 0) {
            labels.positives.insert(id);
        }
    }
    const auto ds = build_dataset(table, labels);
    std::ostringstream out;
    write_features(out, ds);
    std::istringstream in(out.str());
    const auto back = read_features(in);
    CHECK(back.window == ds.window);
    REQUIRE(back.rows.size() == ds.rows.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        CHECK(back.rows[i].track_id == ds.rows[i].track_id);
        CHECK(back.rows[i].label == ds.rows[i].label);
        CHECK(back.rows[i].rates == ds.rows[i].rates);
    }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "wfse/defenses.hpp"
#include "wfse/errors.hpp"
#include "wfse/rng.hpp"

using namespace wfse;

namespace {

Trace make_trace(std::initializer_list<std::pair<double, int>> events, int label = 0) {
    Trace t;
    t.label = label;
    for (const auto& [time, dir] : events)
        t.events.push_back({time, dir > 0 ? Direction::Outgoing : Direction::Incoming, false});
    return t;
}

TraceDataset tiny_dataset(std::size_t classes, std::size_t per_class) {
    TraceDataset ds;
    for (std::size_t c = 0; c < classes; ++c) {
        ds.class_names.push_back("c" + std::to_string(c));
        for (std::size_t i = 0; i < per_class; ++i) {
            Trace t = make_trace({{0.0, +1},
                                  {0.1 * (c + 1), -1},
                                  {0.2 * (c + 1), -1},
                                  {0.3 * (c + 1) + 0.01 * i, +1}},
                                 static_cast<int>(c));
            ds.traces.push_back(t);
        }
    }
    return ds;
}

bool sorted_by_time(const Trace& t) {
    return std::is_sorted(t.events.begin(), t.events.end(),
                          [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });
}

} // namespace

TEST_SUITE("defenses") {

TEST_CASE("constant rate walks the slot grid, fills gaps, and tail-pads") {
    // Outgoing rho 0.5: real at 0 -> slot 0, real at 0.6 -> slot 2 (slot 1
    // becomes a dummy), tail pad to 4 slots. Incoming rho 1.0: real at 0.3 ->
    // slot 1 (slot 0 becomes a dummy), already at the pad multiple.
    const Trace t = make_trace({{0.0, +1}, {0.3, -1}, {0.6, +1}});
    ConstantRateSpec spec;
    spec.rho_out = 0.5;
    spec.rho_in = 1.0;
    spec.pad_multiple = 2;
    Rng rng(0);
    const Trace d = apply_constant_rate(t, spec, rng);

    REQUIRE(d.size() == 6);
    const std::vector<std::tuple<double, int, bool>> expect = {
        {0.0, +1, false}, {0.0, -1, true},  {0.5, +1, true},
        {1.0, +1, false}, {1.0, -1, false}, {1.5, +1, true},
    };
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(d.events[i].time == std::get<0>(expect[i]));
        CHECK(dir_sign(d.events[i].direction) == std::get<1>(expect[i]));
        CHECK(d.events[i].is_dummy == std::get<2>(expect[i]));
    }
}

TEST_CASE("constant rate emits a pad block even for an absent direction") {
    const Trace t = make_trace({{0.0, +1}, {0.4, +1}}); // no incoming packets
    ConstantRateSpec spec;
    spec.rho_out = 0.5;
    spec.rho_in = 0.25;
    spec.pad_multiple = 4;
    Rng rng(0);
    const Trace d = apply_constant_rate(t, spec, rng);
    std::size_t in_count = 0;
    for (const TraceEvent& e : d.events)
        if (e.direction == Direction::Incoming) {
            ++in_count;
            CHECK(e.is_dummy);
        }
    CHECK(in_count == 4);
}

TEST_CASE("constant rate is deterministic and keeps real packet order") {
    const Trace t = make_trace({{0.0, +1}, {0.05, -1}, {0.3, +1}, {0.31, +1}, {0.5, -1}});
    ConstantRateSpec spec;
    Rng r1(1), r2(2);
    const Trace a = apply_constant_rate(t, spec, r1);
    const Trace b = apply_constant_rate(t, spec, r2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.events[i].time == b.events[i].time);
        CHECK(a.events[i].is_dummy == b.events[i].is_dummy);
    }

    // Real packets appear in their original per-direction order at times no
    // earlier than the original.
    std::vector<double> real_out;
    for (const TraceEvent& e : a.events)
        if (!e.is_dummy && e.direction == Direction::Outgoing) real_out.push_back(e.time);
    REQUIRE(real_out.size() == 3);
    CHECK(real_out[0] >= 0.0);
    CHECK(real_out[1] >= 0.3);
    CHECK(real_out[2] >= 0.31);
    CHECK(std::is_sorted(real_out.begin(), real_out.end()));
}

TEST_CASE("front keeps real packets untouched and bounds its dummies") {
    const Trace t = make_trace({{0.0, +1}, {0.7, -1}, {1.4, -1}, {2.0, +1}});
    FrontSpec spec;
    spec.n_client = 10;
    spec.n_server = 12;
    spec.w_min = 0.5;
    spec.w_max = 2.0;
    Rng rng(77);
    const Trace d = apply_front(t, spec, rng);

    CHECK(sorted_by_time(d));
    std::vector<std::pair<double, int>> reals;
    std::size_t out_dummies = 0, in_dummies = 0;
    for (const TraceEvent& e : d.events) {
        if (e.is_dummy) {
            CHECK(e.time <= 2.0); // dropped after the last real packet
            CHECK(e.time >= 0.0);
            if (e.direction == Direction::Outgoing) ++out_dummies;
            else ++in_dummies;
        } else {
            reals.emplace_back(e.time, dir_sign(e.direction));
        }
    }
    CHECK(reals == std::vector<std::pair<double, int>>{{0.0, 1}, {0.7, -1}, {1.4, -1}, {2.0, 1}});
    CHECK(out_dummies <= 10);
    CHECK(in_dummies <= 12);
}

TEST_CASE("front is deterministic per seed and varies across seeds") {
    const Trace t = make_trace({{0.0, +1}, {5.0, -1}});
    FrontSpec spec;
    Rng r1(3), r2(3), r3(4);
    const Trace a = apply_front(t, spec, r1);
    const Trace b = apply_front(t, spec, r2);
    const Trace c = apply_front(t, spec, r3);
    REQUIRE(a.size() == b.size());
    bool equal = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.events[i].time != b.events[i].time) equal = false;
    CHECK(equal);
    CHECK(a.size() != c.size()); // count draw differs with overwhelming probability
}

TEST_CASE("merge sorts the union by time, outgoing first, real before dummy") {
    Trace target = make_trace({{0.0, +1}, {1.0, -1}});
    Trace decoy = make_trace({{0.0, -1}, {1.0, +1}}, 5);
    decoy.events[1].is_dummy = true; // equal-time outgoing dummy sorts after real outgoing
    Trace real_out_late = make_trace({{1.0, +1}}, 7);

    const Trace merged = merge_traces(target, {decoy, real_out_late});
    REQUIRE(merged.size() == 5);
    CHECK(merged.label == target.label);

    CHECK(merged.events[0].time == 0.0);
    CHECK(dir_sign(merged.events[0].direction) == +1);
    CHECK(merged.events[1].time == 0.0);
    CHECK(dir_sign(merged.events[1].direction) == -1);
    // At t=1.0: outgoing real, then outgoing dummy, then incoming real.
    CHECK(dir_sign(merged.events[2].direction) == +1);
    CHECK_FALSE(merged.events[2].is_dummy);
    CHECK(dir_sign(merged.events[3].direction) == +1);
    CHECK(merged.events[3].is_dummy);
    CHECK(dir_sign(merged.events[4].direction) == -1);
}

TEST_CASE("merge with no decoys is the identity") {
    const Trace target = make_trace({{0.0, +1}, {0.5, -1}, {0.5, +1}});
    const Trace merged = merge_traces(target, {});
    REQUIRE(merged.size() == target.size());
    for (std::size_t i = 0; i < target.size(); ++i)
        CHECK(merged.events[i] == target.events[i]);
}

TEST_CASE("merged theoretical error is 1 - 1/m") {
    CHECK(merged_theoretical_error(1) == 0.0);
    CHECK(merged_theoretical_error(2) == 0.5);
    CHECK(merged_theoretical_error(4) == 0.75);
    CHECK_THROWS_AS(merged_theoretical_error(0), ConfigError);
}

TEST_CASE("defense validation rejects out-of-range parameters") {
    DefenseSpec spec;
    ConstantRateSpec cr;
    cr.rho_out = 0.0;
    spec.variant = cr;
    CHECK_THROWS_AS(validate(spec), ConfigError);

    FrontSpec fr;
    fr.w_min = 3.0;
    fr.w_max = 1.0;
    spec.variant = fr;
    CHECK_THROWS_AS(validate(spec), ConfigError);

    MergeSpec mg;
    mg.m = 0;
    spec.variant = mg;
    CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("apply_defense is deterministic and independent of trace order") {
    const TraceDataset ds = tiny_dataset(3, 4);
    DefenseSpec spec;
    spec.variant = FrontSpec{5, 5, 1.0, 2.0};
    spec.seed = 9;

    const DefendedDataset a = apply_defense(ds, spec);
    const DefendedDataset b = apply_defense(ds, spec);
    REQUIRE(a.dataset.traces.size() == b.dataset.traces.size());
    for (std::size_t i = 0; i < a.dataset.traces.size(); ++i) {
        REQUIRE(a.dataset.traces[i].size() == b.dataset.traces[i].size());
        for (std::size_t e = 0; e < a.dataset.traces[i].size(); ++e)
            CHECK(a.dataset.traces[i].events[e] == b.dataset.traces[i].events[e]);
    }
    CHECK(a.overhead.bandwidth_overhead == b.overhead.bandwidth_overhead);
}

TEST_CASE("merge bandwidth overhead counts decoy packets exactly") {
    const TraceDataset ds = tiny_dataset(2, 3); // all traces 4 packets long
    DefenseSpec spec;
    spec.variant = MergeSpec{3};
    spec.seed = 1;
    const DefendedDataset d = apply_defense(ds, spec);
    CHECK(d.overhead.bandwidth_overhead == doctest::Approx(2.0));
    CHECK(d.overhead.latency_overhead == 0.0);
    for (const Trace& t : d.dataset.traces) CHECK(t.size() == 12);
}

TEST_CASE("constant rate overhead reports padding delay") {
    TraceDataset ds;
    ds.class_names = {"only"};
    ds.traces.push_back(make_trace({{0.0, +1}, {0.3, -1}, {0.6, +1}}, 0));
    DefenseSpec spec;
    ConstantRateSpec cr;
    cr.rho_out = 0.5;
    cr.rho_in = 1.0;
    cr.pad_multiple = 2;
    spec.variant = cr;
    const DefendedDataset d = apply_defense(ds, spec);
    // Real packets: out 0 -> 0.0, out 0.6 -> 1.0, in 0.3 -> 1.0.
    CHECK(d.overhead.latency_overhead == doctest::Approx(0.4 + 0.7).epsilon(1e-12));
    CHECK(d.overhead.bandwidth_overhead == doctest::Approx(1.0)); // 3 dummies on 3 real
}

TEST_CASE("external defenses cannot be applied") {
    const TraceDataset ds = tiny_dataset(2, 2);
    DefenseSpec spec;
    spec.variant = ExternalSpec{"precomputed"};
    CHECK_THROWS_AS(apply_defense(ds, spec), ConfigError);
}

TEST_CASE("defending an empty dataset is a data error") {
    TraceDataset ds;
    DefenseSpec spec;
    spec.variant = MergeSpec{2};
    CHECK_THROWS_AS(apply_defense(ds, spec), DataError);
}

} // TEST_SUITE

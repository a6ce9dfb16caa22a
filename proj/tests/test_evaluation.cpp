#include <doctest.h>

#include <map>
#include <set>

#include "sip/evaluation.hpp"
#include "sip/rng.hpp"

using namespace sip;

namespace {

using Labels = std::vector<std::string>;

// Independent recount straight from the definitions, enumerating indices.
MeasureReport brute_force(const std::vector<StatePair>& pairs) {
    std::size_t t_true = 0, t_est = 0, t_both = 0, t_plus = 0, overlap = 0, total = 0;
    for (const auto& [v, ve] : pairs) {
        const auto t_len = v.size();
        std::set<std::size_t> set_true, set_est;
        for (std::size_t t = 1; t < t_len; ++t) {  // t indexes v_{t+1} in 1-based terms
            if (v[t] != v[t - 1]) set_true.insert(t);
            if (ve[t] != ve[t - 1]) set_est.insert(t);
        }
        t_true += set_true.size();
        t_est += set_est.size();
        for (std::size_t t : set_true) {
            if (set_est.count(t)) {
                ++t_both;
                if (ve[t] == v[t]) ++t_plus;
            }
        }
        total += t_len;
        for (std::size_t t = 0; t < t_len; ++t)
            if (v[t] == ve[t]) ++overlap;
    }
    MeasureReport r;
    r.counts = {t_true, t_est, t_both, t_plus, overlap, total};
    auto ratio = [](std::size_t n, std::size_t d) -> std::optional<double> {
        if (d == 0) return std::nullopt;
        return static_cast<double>(n) / static_cast<double>(d);
    };
    r.precision = ratio(t_both, t_est);
    r.recall = ratio(t_both, t_true);
    r.precision_plus = ratio(t_plus, t_est);
    r.recall_plus = ratio(t_plus, t_true);
    r.overlap = ratio(overlap, total);
    return r;
}

Labels random_labels(Rng& rng, int len, int n_labels) {
    Labels v(static_cast<std::size_t>(len));
    for (auto& s : v) s = std::string(1, static_cast<char>('A' + rng.uniform_int(
                                             static_cast<std::uint64_t>(n_labels))));
    return v;
}

}  // namespace

TEST_CASE("transition set basics") {
    CHECK(transition_set({"A", "A", "A"}).empty());
    CHECK(transition_set({"A", "A", "B", "B"}) == std::vector<int>{2});
    CHECK(transition_set({"A"}).empty());
}

TEST_CASE("perfect estimates score 1 on every measure") {
    const Labels v{"A", "A", "B", "C", "C"};
    const auto report = compute_measures({{v, v}});
    CHECK(*report.precision == 1.0);
    CHECK(*report.recall == 1.0);
    CHECK(*report.precision_plus == 1.0);
    CHECK(*report.recall_plus == 1.0);
    CHECK(*report.overlap == 1.0);
}

TEST_CASE("hand-evaluated single pair") {
    // v=(A,A,B,B), v^=(A,B,B,B): transitions at {2} vs {1}, no matches,
    // positions 1,3,4 agree.
    const auto report = compute_measures({{{"A", "A", "B", "B"}, {"A", "B", "B", "B"}}});
    CHECK(*report.precision == 0.0);
    CHECK(*report.recall == 0.0);
    CHECK(*report.precision_plus == 0.0);
    CHECK(*report.recall_plus == 0.0);
    CHECK(*report.overlap == doctest::Approx(0.75));
}

TEST_CASE("zero denominators are undefined markers") {
    // Constant estimate: no estimated transitions -> precision undefined.
    const auto report = compute_measures({{{"A", "B", "A"}, {"A", "A", "A"}}});
    CHECK_FALSE(report.precision.has_value());
    CHECK_FALSE(report.precision_plus.has_value());
    CHECK(*report.recall == 0.0);
    CHECK(*report.overlap == doctest::Approx(2.0 / 3));

    const auto j = measure_report_to_json(report);
    CHECK(j["precision"].is_null());
    CHECK(j["recall"].get<double>() == 0.0);
}

TEST_CASE("length mismatch is an error") {
    CHECK_THROWS_AS(compute_measures({{{"A", "B"}, {"A", "B", "B"}}}), std::invalid_argument);
}

TEST_CASE("plus measures never exceed their base measures") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const int len = 2 + static_cast<int>(rng.uniform_int(7));
        const auto v = random_labels(rng, len, 3);
        const auto ve = random_labels(rng, len, 3);
        const auto r = compute_measures({{v, ve}});
        if (r.precision) CHECK(*r.precision_plus <= *r.precision);
        if (r.recall) CHECK(*r.recall_plus <= *r.recall);
    }
}

TEST_CASE("measures are invariant under a consistent relabeling") {
    Rng rng(13);
    const std::map<std::string, std::string> bijection{{"A", "X"}, {"B", "Y"}, {"C", "Z"}};
    auto rename = [&](Labels v) {
        for (auto& s : v) s = bijection.at(s);
        return v;
    };
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<StatePair> pairs, renamed;
        for (int p = 0; p < 3; ++p) {
            const int len = 2 + static_cast<int>(rng.uniform_int(6));
            const auto v = random_labels(rng, len, 3);
            const auto ve = random_labels(rng, len, 3);
            pairs.push_back({v, ve});
            renamed.push_back({rename(v), rename(ve)});
        }
        const auto a = compute_measures(pairs);
        const auto b = compute_measures(renamed);
        CHECK(a.precision == b.precision);
        CHECK(a.recall == b.recall);
        CHECK(a.precision_plus == b.precision_plus);
        CHECK(a.recall_plus == b.recall_plus);
        CHECK(a.overlap == b.overlap);
    }
}

TEST_CASE("pooled measures match the brute-force recount") {
    Rng rng(29);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<StatePair> pairs;
        const int n_pairs = 1 + static_cast<int>(rng.uniform_int(4));
        for (int p = 0; p < n_pairs; ++p) {
            const int len = 1 + static_cast<int>(rng.uniform_int(8));
            pairs.push_back({random_labels(rng, len, 3), random_labels(rng, len, 3)});
        }
        const auto a = compute_measures(pairs);
        const auto b = brute_force(pairs);
        CHECK(a.counts.true_transitions == b.counts.true_transitions);
        CHECK(a.counts.estimated_transitions == b.counts.estimated_transitions);
        CHECK(a.counts.matched_transitions == b.counts.matched_transitions);
        CHECK(a.counts.directed_matches == b.counts.directed_matches);
        CHECK(a.counts.overlap_positions == b.counts.overlap_positions);
        CHECK(a.counts.total_positions == b.counts.total_positions);
        CHECK(a.precision == b.precision);
        CHECK(a.recall == b.recall);
        CHECK(a.precision_plus == b.precision_plus);
        CHECK(a.recall_plus == b.recall_plus);
        CHECK(a.overlap == b.overlap);
    }
}

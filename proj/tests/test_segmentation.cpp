#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sip/rng.hpp"
#include "sip/segmentation.hpp"
#include "test_util.hpp"

using namespace sip;

namespace {

std::vector<double> random_entropy(Rng& rng, int len, double lo = 0.0, double hi = 2.0) {
    std::vector<double> h(static_cast<std::size_t>(len));
    for (auto& v : h) v = lo + (hi - lo) * rng.uniform();
    return h;
}

std::set<int> interior(const SegmentationResult& r) {
    return {r.boundaries.begin() + 1, r.boundaries.end() - 1};
}

}  // namespace

TEST_CASE("entropy analytic values") {
    Eigen::VectorXd point = Eigen::VectorXd::Zero(5);
    point[2] = 1.0;
    CHECK(entropy(point) == doctest::Approx(0.0).epsilon(1e-12));

    Eigen::VectorXd uniform26 = Eigen::VectorXd::Constant(26, 1.0 / 26.0);
    CHECK(std::abs(entropy(uniform26) - std::log(26.0)) < 1e-12);

    Eigen::VectorXd half = Eigen::VectorXd::Zero(6);
    half[0] = half[1] = 0.5;
    CHECK(std::abs(entropy(half) - std::log(2.0)) < 1e-12);
}

TEST_CASE("entropy process of the zero-weight model is flat at log M") {
    PredictorParams params(4, 3);  // zero weights
    ResponseProcess p;
    p.id = "x";
    p.actions = {0, 1, 2, 3, 1, 0};
    const auto ep = entropy_process(p, params);
    CHECK(ep.values.size() == p.actions.size() - 1);
    for (double h : ep.values) CHECK(h == doctest::Approx(std::log(4.0)));

    ResponseProcess two;
    two.id = "t";
    two.actions = {0, 1};
    CHECK(entropy_process(two, params).values.size() == 1);
}

TEST_CASE("entropy process stays within [0, log M]") {
    Rng rng(11);
    PredictorParams params = PredictorParams::random_init(5, 3, 123);
    for (int trial = 0; trial < 10; ++trial) {
        ResponseProcess p;
        p.id = "r";
        const int len = 2 + static_cast<int>(rng.uniform_int(20));
        for (int t = 0; t < len; ++t) p.actions.push_back(static_cast<int>(rng.uniform_int(5)));
        for (double h : entropy_process(p, params).values) {
            CHECK(h >= 0.0);
            CHECK(h <= std::log(5.0) + 1e-12);
        }
    }
}

TEST_CASE("local maxima with plateaus and edges") {
    CHECK(local_maxima({1, 0, 1}) == std::vector<int>{1, 3});
    CHECK(local_maxima({5, 4, 3, 2}) == std::vector<int>{1});
    CHECK(local_maxima({2, 2, 2}) == std::vector<int>{1});
    CHECK(local_maxima({0, 1, 1, 0}) == std::vector<int>{2});
    CHECK(local_maxima({1, 1, 0, 1}) == std::vector<int>{1, 4});
    CHECK(local_maxima({0, 1, 0, 1, 0}) == std::vector<int>{2, 4});
    CHECK(local_maxima({0.5}) == std::vector<int>{1});
}

TEST_CASE("u-curve qualification") {
    const std::vector<double> h{1, 0, 1};
    CHECK(is_u_curve(h, 1, 3, 0.5));
    CHECK(is_u_curve(h, 1, 3, 1.0));  // both endpoints at the unique-valued max level
    CHECK_FALSE(is_u_curve(h, 1, 2, 0.75));
    CHECK_THROWS_AS(is_u_curve(h, 0, 2, 0.5), std::out_of_range);
    CHECK_THROWS_AS(is_u_curve(h, 2, 2, 0.5), std::out_of_range);

    // lambda = 0: every consecutive local-max pair qualifies.
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto hr = random_entropy(rng, 12);
        const auto maxima = local_maxima(hr);
        for (std::size_t k = 0; k + 1 < maxima.size(); ++k)
            CHECK(is_u_curve(hr, maxima[k], maxima[k + 1], 0.0));
    }

    // lambda = 1 with a unique global max: no real pair qualifies.
    for (int trial = 0; trial < 50; ++trial) {
        auto hr = random_entropy(rng, 10);
        const auto mx = std::max_element(hr.begin(), hr.end());
        for (std::size_t i = 0; i < hr.size(); ++i) CHECK(*mx >= hr[i]);
        const int n = static_cast<int>(hr.size());
        bool any = false;
        for (int i = 1; i < n; ++i)
            for (int j = i + 1; j <= n; ++j) any = any || is_u_curve(hr, i, j, 1.0);
        CHECK_FALSE(any);
    }
}

TEST_CASE("segmentation hand cases") {
    // Constant entropy: no depth anywhere.
    const SegmentationResult flat = segment({0.7, 0.7, 0.7, 0.7}, 0.5);
    CHECK(flat.boundaries == std::vector<int>{0, 5});

    // Full-depth valleys at every second index.
    const SegmentationResult weave = segment({1, 0, 1, 0, 1}, 0.5);
    CHECK(weave.boundaries == std::vector<int>{0, 1, 3, 5, 6});

    const SegmentationResult simple = segment({1, 0, 1}, 0.5);
    CHECK(simple.boundaries == std::vector<int>{0, 1, 3, 4});

    CHECK_THROWS_AS(segment({1.0, 0.5}, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(segment({1.0, 0.5}, -0.1), std::invalid_argument);
}

TEST_CASE("lambda = 1 with a unique global maximum gives one segment") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        auto h = random_entropy(rng, 3 + static_cast<int>(rng.uniform_int(15)));
        // Make the maximum unique.
        const auto mx = std::max_element(h.begin(), h.end());
        *mx += 0.5;
        const auto result = segment(h, 1.0);
        CHECK(result.boundaries == std::vector<int>{0, static_cast<int>(h.size()) + 1});
    }
}

TEST_CASE("lambda = 0 cuts at every pair of consecutive local maxima") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto h = random_entropy(rng, 2 + static_cast<int>(rng.uniform_int(15)));
        const auto maxima = local_maxima(h);
        const auto cuts = interior(segment(h, 0.0));
        if (maxima.size() >= 2) {
            for (int d : maxima) CHECK(cuts.count(d) == 1);
        }
        for (int c : cuts)
            CHECK(std::find(maxima.begin(), maxima.end(), c) != maxima.end());
    }
}

TEST_CASE("boundaries are strictly increasing from 0 to T and lie on local maxima") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto h = random_entropy(rng, 1 + static_cast<int>(rng.uniform_int(20)));
        const double lambda = rng.uniform();
        const auto result = segment(h, lambda);
        REQUIRE(result.boundaries.size() >= 2);
        CHECK(result.boundaries.front() == 0);
        CHECK(result.boundaries.back() == static_cast<int>(h.size()) + 1);
        for (std::size_t i = 0; i + 1 < result.boundaries.size(); ++i)
            CHECK(result.boundaries[i] < result.boundaries[i + 1]);
        const auto maxima = local_maxima(h);
        for (std::size_t i = 1; i + 1 < result.boundaries.size(); ++i)
            CHECK(std::find(maxima.begin(), maxima.end(), result.boundaries[i]) != maxima.end());
    }
}

TEST_CASE("segment count is non-increasing in lambda on random entropy") {
    Rng rng(41);
    for (int trial = 0; trial < 60; ++trial) {
        const auto h = random_entropy(rng, 4 + static_cast<int>(rng.uniform_int(16)));
        int prev = std::numeric_limits<int>::max();
        for (int grid = 0; grid <= 10; ++grid) {
            const int count = segment(h, grid / 10.0).segment_count();
            CHECK(count <= prev);
            prev = count;
        }
    }
}

TEST_CASE("segments file round trips") {
    std::vector<SegmentedProcess> rows(2);
    rows[0] = {"p1", 0.3, {0, 4, 9}, {1.0, 0.5, 0.25, 1.5, 0.1, 0.9, 1.1, 0.2}};
    rows[1] = {"p2", 0.3, {0, 3}, {0.4, 0.5}};
    sip::test::TempFile file("segments");
    write_segments_file(file.path(), rows);
    const auto loaded = read_segments_file(file.path());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].id == "p1");
    CHECK(loaded[0].boundaries == rows[0].boundaries);
    CHECK(loaded[0].entropy == rows[0].entropy);
    CHECK(loaded[1].lambda == 0.3);
}

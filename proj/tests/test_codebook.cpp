#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hbf/codebook.hpp"

using namespace hbf;

namespace {

RawCodebook small_raw() {
    // root splits into two halves; left half has two quarter cells
    RawCodebook raw;
    raw.nodes = {
        {1, 0, {0, 8, 0, 4}, 1e-10},
        {2, 1, {0, 4, 0, 4}, 1e-9},
        {3, 1, {4, 8, 0, 4}, 1e-9},
        {4, 2, {0, 2, 0, 4}, 1e-8},
        {5, 2, {2, 4, 0, 4}, 1e-8},
    };
    raw.noise_power = 1e-12;
    raw.bandwidth = 1e6;
    return raw;
}

} // namespace

TEST_CASE("region membership is half-open") {
    Region r{0, 1, 0, 1};
    CHECK(r.contains(0.0, 0.0));
    CHECK_FALSE(r.contains(1.0, 0.5));
    CHECK_FALSE(r.contains(0.5, 1.0));
    Region right{1, 2, 0, 1};
    CHECK(r.disjoint(right)); // shared edge is not an overlap
}

TEST_CASE("tree construction rejects bad parent vectors") {
    std::vector<Region> boxes(4, Region{0, 1, 0, 1});
    CHECK_THROWS_AS(CodebookTree({0, 0, 3, 1}, boxes), CodebookError); // parent after child
    CHECK_THROWS_AS(CodebookTree({0, 1, 1, 2}, boxes), CodebookError); // wrong root parent
    CodebookTree t({0, 0, 1, 1}, boxes);
    CHECK(t.node_count() == 3);
    CHECK(t.depth(3) == 1);
    CHECK(t.height() == 1);
}

TEST_CASE("ancestor and subtree queries") {
    std::vector<Region> boxes(8, Region{0, 1, 0, 1});
    CodebookTree t({0, 0, 1, 1, 2, 2, 3, 3}, boxes);
    CHECK(t.ancestors(5) == std::vector<int>{2, 1});
    CHECK(t.ancestors(1).empty());
    CHECK(t.is_ancestor(1, 7));
    CHECK_FALSE(t.is_ancestor(2, 6));
    CHECK_FALSE(t.is_ancestor(4, 4));
    auto sub = t.subtree(2);
    CHECK(sub.size() == 3);
    CHECK(sub[0] == 2);
    CHECK(t.is_line() == false);
    CHECK(t.max_degree() == 2);
}

TEST_CASE("validation accepts the well-formed example") {
    auto report = validate_codebook(small_raw());
    CHECK(report.pass());
    CHECK(report.failures.empty());
}

TEST_CASE("validation flags overlapping siblings") {
    auto raw = small_raw();
    raw.nodes[2].box = {3, 8, 0, 4}; // overlaps node 2 on [3,4)
    auto report = validate_codebook(raw);
    CHECK_FALSE(report.siblings_disjoint);
    CHECK_FALSE(report.pass());
    CHECK_FALSE(report.failures.empty());
    CHECK_THROWS_AS(build_codebook(raw), CodebookError);
}

TEST_CASE("validation flags child outside parent and non-monotone gain") {
    auto raw = small_raw();
    raw.nodes[3].box = {0, 2, 0, 5}; // pokes above the parent
    CHECK_FALSE(validate_codebook(raw).nested_ok);

    raw = small_raw();
    raw.nodes[1].gain = 1e-10; // equal to the root gain, not strictly larger
    CHECK_FALSE(validate_codebook(raw).gain_monotone);
}

TEST_CASE("build re-sorts nodes by depth") {
    RawCodebook raw;
    // ids deliberately out of depth order
    raw.nodes = {
        {7, 0, {0, 8, 0, 4}, 1e-10},
        {2, 7, {0, 4, 0, 4}, 1e-9},
        {5, 2, {0, 2, 0, 4}, 1e-8},
        {9, 7, {4, 8, 0, 4}, 1e-9},
    };
    raw.noise_power = 1e-12;
    raw.bandwidth = 1e6;
    Codebook cb = build_codebook(raw);
    CHECK(cb.tree.node_count() == 4);
    for (int v = 2; v <= 4; ++v) CHECK(cb.tree.parent(v) < v);
    CHECK(cb.tree.depth(4) == 2);
    // gains follow the nodes through the renumbering
    CHECK(cb.gains.gain[1] == doctest::Approx(1e-10));
    CHECK(cb.gains.gain[4] == doctest::Approx(1e-8));
}

TEST_CASE("spectral efficiency from the gain model") {
    GainModel g;
    g.gain = {0.0, 1e-9};
    g.noise_power = 1e-12;
    g.bandwidth = 1e6;
    // 1e6 * log2(1 + 1000) = 9.967e6 bits/s
    CHECK(g.rate(1) == doctest::Approx(1e6 * std::log2(1001.0)));
    CHECK(g.rate(1) == doctest::Approx(9.9672e6).epsilon(1e-4));
}

TEST_CASE("rates increase with depth in a valid codebook") {
    Codebook cb = build_codebook(small_raw());
    for (int v = 2; v <= cb.tree.node_count(); ++v)
        CHECK(cb.gains.rate(v) > cb.gains.rate(cb.tree.parent(v)));
}

TEST_CASE("association descends to the deepest covering beam") {
    Codebook cb = build_codebook(small_raw());
    CHECK(associate(cb.tree, 1.0, 1.0) == 4);
    CHECK(associate(cb.tree, 3.0, 1.0) == 5);
    CHECK(associate(cb.tree, 6.0, 1.0) == 3);
    CHECK_THROWS_AS(associate(cb.tree, 9.0, 1.0), PointOutsideCell);
    CHECK_THROWS_AS(associate(cb.tree, 1.0, 4.0), PointOutsideCell);
}

TEST_CASE("association matches a brute-force deepest-cover scan") {
    Codebook cb = build_codebook(small_raw());
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(0.0, 8.0), uy(0.0, 4.0);
    for (int i = 0; i < 2000; ++i) {
        double x = ux(rng), y = uy(rng);
        int deepest = 0, best_depth = -1;
        for (int v = 1; v <= cb.tree.node_count(); ++v)
            if (cb.tree.region(v).contains(x, y) && cb.tree.depth(v) > best_depth) {
                deepest = v;
                best_depth = cb.tree.depth(v);
            }
        CHECK(associate(cb.tree, x, y) == deepest);
    }
}

TEST_CASE("associate_all fills beams, rates and per-beam counts") {
    Codebook cb = build_codebook(small_raw());
    FlowPopulation pop;
    pop.flows = {{0, 1.0, 1.0}, {1, 3.0, 1.0}, {2, 6.0, 1.0}, {3, 1.5, 2.0}};
    associate_all(cb, pop);
    CHECK(pop.flows[0].beam == 4);
    CHECK(pop.flows[2].beam == 3);
    CHECK(pop.flows[0].rate == doctest::Approx(cb.gains.rate(4)));
    auto counts = pop.counts(cb.tree);
    CHECK(counts[4] == 2);
    CHECK(counts[3] == 1);
    CHECK(counts[1] == 0);
}

TEST_CASE("JSON parsing round trip and error localization") {
    std::istringstream good(R"({
      "noise_power": 1e-12, "bandwidth": 1e6,
      "nodes": [
        {"id": 1, "parent": 0, "box": [0, 8, 0, 4], "gain": 1e-10},
        {"id": 2, "parent": 1, "box": [0, 4, 0, 4], "gain": 1e-9}
      ]})");
    RawCodebook raw = parse_codebook(good);
    CHECK(raw.nodes.size() == 2);
    CHECK(raw.bandwidth == doctest::Approx(1e6));
    CHECK(validate_codebook(raw).pass());

    std::istringstream bad_box(R"({
      "noise_power": 1e-12, "bandwidth": 1e6,
      "nodes": [{"id": 1, "parent": 0, "box": [0, 8, 0], "gain": 1e-10}]})");
    CHECK_THROWS_AS(parse_codebook(bad_box), ConfigError);

    std::istringstream not_json("nonsense");
    CHECK_THROWS_AS(parse_codebook(not_json), ConfigError);
}

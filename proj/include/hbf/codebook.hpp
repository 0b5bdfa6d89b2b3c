#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hbf/errors.hpp"

namespace hbf {

/// Axis-aligned box with half-open membership [x0,x1) x [y0,y1), so boxes
/// sharing an edge are disjoint as point sets.
struct Region {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

    bool well_formed() const { return x0 < x1 && y0 < y1; }
    bool contains(double x, double y) const {
        return x >= x0 && x < x1 && y >= y0 && y < y1;
    }
    bool contains(const Region& other) const {
        return other.x0 >= x0 && other.x1 <= x1 && other.y0 >= y0 && other.y1 <= y1;
    }
    bool disjoint(const Region& other) const {
        return other.x1 <= x0 || other.x0 >= x1 || other.y1 <= y0 || other.y0 >= y1;
    }
};

/// Directed tree of beams. Nodes are 1..|V| sorted by non-decreasing depth,
/// so every edge (v,v') has v < v'. Immutable after construction.
class CodebookTree {
public:
    /// parent[v] for v in 1..n (index 0 unused); root is node 1 with parent 0.
    /// Throws CodebookError unless parent[1]==0 and 0 < parent[v] < v otherwise.
    CodebookTree(std::vector<int> parent, std::vector<Region> regions);

    int node_count() const { return n_; }
    int parent(int v) const { return parent_[v]; }
    const std::vector<int>& children(int v) const { return children_[v]; }
    int degree(int v) const { return static_cast<int>(children_[v].size()); }
    int depth(int v) const { return depth_[v]; }
    int height() const { return height_; }
    int max_degree() const { return max_degree_; }
    bool is_leaf(int v) const { return children_[v].empty(); }
    bool is_line() const;
    const Region& region(int v) const { return regions_[v]; }

    /// Strict ancestors of v, nearest first.
    std::vector<int> ancestors(int v) const;
    /// v together with all its descendants, preorder.
    std::vector<int> subtree(int v) const;
    bool is_ancestor(int a, int v) const;

private:
    int n_;
    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
    std::vector<int> depth_;
    std::vector<Region> regions_;
    int height_ = 0;
    int max_degree_ = 0;
};

/// Per-beam received power plus radio constants. Gains must strictly
/// increase along every root-to-leaf path.
struct GainModel {
    std::vector<double> gain; // index 1..n, [0] unused
    double noise_power = 1.0; // N0^2
    double bandwidth = 1.0;   // W, Hz

    /// W * log2(1 + g_v / N0^2)
    double rate(int v) const;
};

struct Codebook {
    CodebookTree tree;
    GainModel gains;
};

struct Flow {
    int id = 0;
    double x = 0.0, y = 0.0;
    int beam = 0;      // filled by associate_all
    double rate = 0.0; // bits/s, filled from the gain model
};

struct FlowPopulation {
    std::vector<Flow> flows;

    /// n_v = |K(v)| per beam, index 1..n.
    std::vector<long> counts(const CodebookTree& tree) const;
};

struct ValidationReport {
    bool structure_ok = false;      // single root, parent<child, |E|=|V|-1
    bool regions_well_formed = false;
    bool nested_ok = false;         // Def (i): child region inside parent region
    bool siblings_disjoint = false; // Def (ii)
    bool gain_monotone = false;     // Def (iii), strict
    std::vector<std::string> failures;

    bool pass() const {
        return structure_ok && regions_well_formed && nested_ok &&
               siblings_disjoint && gain_monotone;
    }
};

/// Raw parsed form, prior to validation and depth-sorting.
struct RawCodebook {
    struct Node {
        int id = 0;
        int parent = 0; // 0 means root
        Region box;
        double gain = 0.0;
    };
    std::vector<Node> nodes;
    double noise_power = 1.0;
    double bandwidth = 1.0;
};

ValidationReport validate_codebook(const RawCodebook& raw);

/// Re-sorts nodes to the depth-nondecreasing numbering and builds the
/// immutable codebook. Throws CodebookError if validation fails.
Codebook build_codebook(const RawCodebook& raw);

/// Parses the JSON codebook file format:
///   {"nodes":[{"id":1,"parent":0,"box":[x0,x1,y0,y1],"gain":g},...],
///    "noise_power":..., "bandwidth":...}
/// Throws ConfigError with a node-localized message on malformed input.
RawCodebook parse_codebook(std::istream& in);
Codebook load_codebook(const std::string& path);

/// Deepest beam covering the point, found by descending from the root.
/// Throws PointOutsideCell if the point is not in the root region.
int associate(const CodebookTree& tree, double x, double y);

/// Associates every flow and fills its beam and rate.
void associate_all(const Codebook& cb, FlowPopulation& pop);

} // namespace hbf

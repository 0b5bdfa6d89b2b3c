#include "hbf/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hbf {

CodebookTree::CodebookTree(std::vector<int> parent, std::vector<Region> regions)
    : parent_(std::move(parent)), regions_(std::move(regions)) {
    if (parent_.size() < 2 || parent_.size() != regions_.size())
        throw CodebookError("tree needs at least one node and matching region count");
    n_ = static_cast<int>(parent_.size()) - 1;
    if (parent_[1] != 0)
        throw CodebookError("node 1 must be the root (parent 0)");
    children_.assign(n_ + 1, {});
    depth_.assign(n_ + 1, 0);
    for (int v = 2; v <= n_; ++v) {
        if (parent_[v] < 1 || parent_[v] >= v)
            throw CodebookError("node " + std::to_string(v) +
                                ": parent must satisfy 1 <= parent < node (depth-sorted numbering)");
        children_[parent_[v]].push_back(v);
        depth_[v] = depth_[parent_[v]] + 1;
        height_ = std::max(height_, depth_[v]);
    }
    for (int v = 1; v <= n_; ++v)
        max_degree_ = std::max(max_degree_, degree(v));
}

bool CodebookTree::is_line() const {
    for (int v = 1; v <= n_; ++v)
        if (degree(v) > 1) return false;
    return true;
}

std::vector<int> CodebookTree::ancestors(int v) const {
    std::vector<int> out;
    for (int a = parent_[v]; a != 0; a = parent_[a]) out.push_back(a);
    return out;
}

std::vector<int> CodebookTree::subtree(int v) const {
    std::vector<int> out{v};
    for (std::size_t i = 0; i < out.size(); ++i)
        for (int c : children_[out[i]]) out.push_back(c);
    return out;
}

bool CodebookTree::is_ancestor(int a, int v) const {
    for (int u = parent_[v]; u != 0; u = parent_[u])
        if (u == a) return true;
    return false;
}

double GainModel::rate(int v) const {
    return bandwidth * std::log2(1.0 + gain[v] / noise_power);
}

std::vector<long> FlowPopulation::counts(const CodebookTree& tree) const {
    std::vector<long> n(tree.node_count() + 1, 0);
    for (const Flow& f : flows) n[f.beam]++;
    return n;
}

namespace {

// Orders raw nodes by (depth, original id) and returns the new 1-based index
// per original id, or an error message.
std::optional<std::string> depth_sort(const RawCodebook& raw, std::vector<int>& order) {
    std::map<int, int> by_id; // id -> position in raw.nodes
    for (std::size_t i = 0; i < raw.nodes.size(); ++i) {
        if (!by_id.emplace(raw.nodes[i].id, static_cast<int>(i)).second)
            return "duplicate node id " + std::to_string(raw.nodes[i].id);
    }
    int roots = 0;
    std::map<int, int> depth;
    // ids may come in any order; resolve depths by chasing parents with a cycle guard
    for (const auto& node : raw.nodes) {
        if (node.parent == 0) {
            roots++;
            continue;
        }
        if (!by_id.count(node.parent))
            return "node " + std::to_string(node.id) + ": unknown parent " +
                   std::to_string(node.parent);
    }
    if (roots != 1) return "expected exactly one root, found " + std::to_string(roots);
    for (const auto& node : raw.nodes) {
        int d = 0;
        int cur = node.id;
        while (true) {
            int p = raw.nodes[by_id[cur]].parent;
            if (p == 0) break;
            cur = p;
            if (++d > static_cast<int>(raw.nodes.size()))
                return "cycle detected through node " + std::to_string(node.id);
        }
        depth[node.id] = d;
    }
    std::vector<int> ids;
    ids.reserve(raw.nodes.size());
    for (const auto& node : raw.nodes) ids.push_back(node.id);
    std::sort(ids.begin(), ids.end(),
              [&](int a, int b) { return std::pair(depth[a], a) < std::pair(depth[b], b); });
    order.assign(ids.size() + 1, 0); // original position -> new 1-based id, via map below
    std::map<int, int> new_id;
    for (std::size_t i = 0; i < ids.size(); ++i) new_id[ids[i]] = static_cast<int>(i) + 1;
    order.resize(raw.nodes.size());
    for (std::size_t i = 0; i < raw.nodes.size(); ++i) order[i] = new_id[raw.nodes[i].id];
    return std::nullopt;
}

} // namespace

ValidationReport validate_codebook(const RawCodebook& raw) {
    ValidationReport rep;
    std::vector<int> order;
    if (raw.nodes.empty()) {
        rep.failures.push_back("empty codebook");
        return rep;
    }
    if (auto err = depth_sort(raw, order)) {
        rep.failures.push_back(*err);
        return rep;
    }
    rep.structure_ok = true;

    int n = static_cast<int>(raw.nodes.size());
    std::vector<const RawCodebook::Node*> node(n + 1, nullptr);
    std::vector<int> parent(n + 1, 0);
    std::map<int, int> new_id;
    for (int i = 0; i < n; ++i) node[order[i]] = &raw.nodes[i];
    for (int i = 0; i < n; ++i) new_id[raw.nodes[i].id] = order[i];
    for (int v = 1; v <= n; ++v)
        parent[v] = node[v]->parent == 0 ? 0 : new_id[node[v]->parent];

    rep.regions_well_formed = true;
    for (int v = 1; v <= n; ++v) {
        if (!node[v]->box.well_formed()) {
            rep.regions_well_formed = false;
            rep.failures.push_back("node " + std::to_string(node[v]->id) +
                                   ": degenerate box");
        }
    }

    rep.nested_ok = true;
    rep.gain_monotone = true;
    for (int v = 2; v <= n; ++v) {
        int p = parent[v];
        if (!node[p]->box.contains(node[v]->box)) {
            rep.nested_ok = false;
            rep.failures.push_back("node " + std::to_string(node[v]->id) +
                                   ": box not nested in parent (property i)");
        }
        if (!(node[v]->gain > node[p]->gain)) {
            rep.gain_monotone = false;
            rep.failures.push_back("node " + std::to_string(node[v]->id) +
                                   ": gain not strictly above parent (property iii)");
        }
    }

    rep.siblings_disjoint = true;
    std::vector<std::vector<int>> children(n + 1);
    for (int v = 2; v <= n; ++v) children[parent[v]].push_back(v);
    for (int v = 1; v <= n; ++v) {
        const auto& cs = children[v];
        for (std::size_t i = 0; i < cs.size(); ++i)
            for (std::size_t j = i + 1; j < cs.size(); ++j)
                if (!node[cs[i]]->box.disjoint(node[cs[j]]->box)) {
                    rep.siblings_disjoint = false;
                    rep.failures.push_back(
                        "nodes " + std::to_string(node[cs[i]]->id) + " and " +
                        std::to_string(node[cs[j]]->id) +
                        ": sibling boxes overlap (property ii)");
                }
    }
    for (int v = 1; v <= n; ++v) {
        if (node[v]->gain < 0.0) {
            rep.gain_monotone = false;
            rep.failures.push_back("node " + std::to_string(node[v]->id) +
                                   ": negative gain");
        }
    }
    return rep;
}

Codebook build_codebook(const RawCodebook& raw) {
    ValidationReport rep = validate_codebook(raw);
    if (!rep.pass()) {
        std::string msg = "invalid codebook:";
        for (const auto& f : rep.failures) msg += "\n  " + f;
        throw CodebookError(msg);
    }
    if (raw.noise_power <= 0.0) throw CodebookError("noise_power must be positive");
    if (raw.bandwidth <= 0.0) throw CodebookError("bandwidth must be positive");

    std::vector<int> order;
    depth_sort(raw, order); // already validated
    int n = static_cast<int>(raw.nodes.size());
    std::vector<int> parent(n + 1, 0);
    std::vector<Region> regions(n + 1);
    std::vector<double> gain(n + 1, 0.0);
    std::map<int, int> new_id;
    for (int i = 0; i < n; ++i) new_id[raw.nodes[i].id] = order[i];
    for (int i = 0; i < n; ++i) {
        int v = order[i];
        parent[v] = raw.nodes[i].parent == 0 ? 0 : new_id[raw.nodes[i].parent];
        regions[v] = raw.nodes[i].box;
        gain[v] = raw.nodes[i].gain;
    }
    return Codebook{CodebookTree(std::move(parent), std::move(regions)),
                    GainModel{std::move(gain), raw.noise_power, raw.bandwidth}};
}

RawCodebook parse_codebook(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("codebook parse error: ") + e.what());
    }
    RawCodebook raw;
    try {
        raw.noise_power = j.at("noise_power").get<double>();
        raw.bandwidth = j.at("bandwidth").get<double>();
        for (const auto& jn : j.at("nodes")) {
            RawCodebook::Node node;
            node.id = jn.at("id").get<int>();
            node.parent = jn.at("parent").get<int>();
            auto box = jn.at("box");
            if (!box.is_array() || box.size() != 4)
                throw ConfigError("node " + std::to_string(node.id) +
                                  ": box must be [x0,x1,y0,y1]");
            node.box = Region{box[0].get<double>(), box[1].get<double>(),
                              box[2].get<double>(), box[3].get<double>()};
            node.gain = jn.at("gain").get<double>();
            raw.nodes.push_back(node);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("codebook field error: ") + e.what());
    }
    return raw;
}

Codebook load_codebook(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open codebook file: " + path);
    return build_codebook(parse_codebook(in));
}

int associate(const CodebookTree& tree, double x, double y) {
    if (!tree.region(1).contains(x, y))
        throw PointOutsideCell("point outside the cell region");
    int v = 1;
    for (;;) {
        int next = 0;
        for (int c : tree.children(v))
            if (tree.region(c).contains(x, y)) {
                next = c;
                break;
            }
        if (next == 0) return v;
        v = next;
    }
}

void associate_all(const Codebook& cb, FlowPopulation& pop) {
    for (Flow& f : pop.flows) {
        f.beam = associate(cb.tree, f.x, f.y);
        f.rate = cb.gains.rate(f.beam);
    }
}

} // namespace hbf

#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "wfmatch/features.hpp"

namespace wfm {

struct WireframeConfig {
  double merge_distance = 3.0;  // pixels
};

struct WireframeNode {
  double x = 0.0, y = 0.0;          // merged position (cluster centroid)
  double score = 0.0;               // keypoint score, or max member line score
  std::vector<double> desc;         // renormalized mean of member descriptors
  bool is_endpoint = false;
  double orig_x = 0.0, orig_y = 0.0;  // first member's sub-pixel detection
};

struct WireframeEdge {
  int node_i = 0, node_j = 0;   // endpoint 1 / endpoint 2 of the original line
  double score = 0.0;           // line score s_l
  int line_index = 0;           // index into FeatureSet::lines
  Vec2 orig_p1, orig_p2;        // original sub-pixel endpoints
};

struct Wireframe {
  int image_width = 0, image_height = 0;
  std::vector<WireframeNode> nodes;
  std::vector<WireframeEdge> edges;
  // per node: (neighbor node, edge index), ordered by edge index
  std::vector<std::vector<std::pair<int, int>>> adjacency;

  int degree(int node) const { return static_cast<int>(adjacency[node].size()); }
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

inline std::vector<double> mean_descriptor(const std::vector<const std::vector<double>*>& members) {
  std::vector<double> d(members[0]->size(), 0.0);
  for (const auto* m : members)
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += (*m)[i];
  double n2 = 0.0;
  for (double v : d) n2 += v * v;
  const double n = std::sqrt(n2);
  if (n > 1e-12)
    for (double& v : d) v /= n;
  return d;
}

}  // namespace detail

// Lifts the feature cloud into a connected wireframe: keypoints within
// merge_distance of any original line endpoint are dropped, endpoints are
// merged by single-linkage clustering, and every input line becomes exactly
// one edge between merged nodes. A line whose own endpoints would collapse
// into one cluster keeps them as separate unmerged nodes, so edges never
// self-loop.
inline Wireframe build_wireframe(const FeatureSet& f, const WireframeConfig& cfg) {
  const double d = cfg.merge_distance;
  Wireframe w;
  w.image_width = f.width;
  w.image_height = f.height;

  const int n_lines = static_cast<int>(f.lines.size());
  const int n_ep = 2 * n_lines;  // endpoint instance e of line l has id 2l+e

  auto ep_pos = [&](int inst) -> Vec2 {
    const LineSegment& l = f.lines[inst / 2];
    return (inst % 2 == 0) ? l.p1() : l.p2();
  };
  auto ep_desc = [&](int inst) -> const std::vector<double>& {
    const LineSegment& l = f.lines[inst / 2];
    return (inst % 2 == 0) ? l.desc1 : l.desc2;
  };

  // keypoints near an original endpoint are redundant
  std::vector<int> kept_kp;
  for (std::size_t k = 0; k < f.keypoints.size(); ++k) {
    bool near = false;
    const Vec2 p{f.keypoints[k].x, f.keypoints[k].y};
    for (int i = 0; i < n_ep && !near; ++i) near = dist(p, ep_pos(i)) <= d;
    if (!near) kept_kp.push_back(static_cast<int>(k));
  }

  // single-linkage endpoint clustering
  detail::UnionFind uf(n_ep);
  for (int i = 0; i < n_ep; ++i)
    for (int j = i + 1; j < n_ep; ++j)
      if (dist(ep_pos(i), ep_pos(j)) <= d) uf.unite(i, j);

  // lines collapsing onto themselves get their endpoints pinned as singletons
  std::vector<bool> pinned(n_ep, false);
  for (int l = 0; l < n_lines; ++l)
    if (uf.find(2 * l) == uf.find(2 * l + 1)) pinned[2 * l] = pinned[2 * l + 1] = true;

  // cluster members grouped by union-find root; pinned instances are excluded
  // and become their own singleton cluster
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n_ep; ++i)
    if (!pinned[i]) clusters[uf.find(i)].push_back(i);
  // keyed by min member instance for a stable, permutation-independent order
  std::map<int, std::vector<int>> by_min;
  for (auto& [root, members] : clusters) by_min[*std::min_element(members.begin(), members.end())] = members;
  for (int i = 0; i < n_ep; ++i)
    if (pinned[i]) by_min[i] = {i};

  // nodes: kept keypoints first, then endpoint clusters
  std::vector<int> ep_node(n_ep, -1);
  for (int k : kept_kp) {
    const Keypoint& kp = f.keypoints[k];
    w.nodes.push_back(WireframeNode{kp.x, kp.y, kp.score, kp.desc, false, kp.x, kp.y});
  }
  for (const auto& [min_inst, members] : by_min) {
    WireframeNode node;
    node.is_endpoint = true;
    std::vector<const std::vector<double>*> descs;
    for (int inst : members) {
      const Vec2 p = ep_pos(inst);
      node.x += p.x;
      node.y += p.y;
      node.score = std::max(node.score, f.lines[inst / 2].score);
      descs.push_back(&ep_desc(inst));
    }
    node.x /= members.size();
    node.y /= members.size();
    node.orig_x = ep_pos(min_inst).x;
    node.orig_y = ep_pos(min_inst).y;
    node.desc = detail::mean_descriptor(descs);
    const int id = static_cast<int>(w.nodes.size());
    for (int inst : members) ep_node[inst] = id;
    w.nodes.push_back(std::move(node));
  }

  for (int l = 0; l < n_lines; ++l) {
    WireframeEdge e;
    e.node_i = ep_node[2 * l];
    e.node_j = ep_node[2 * l + 1];
    e.score = f.lines[l].score;
    e.line_index = l;
    e.orig_p1 = f.lines[l].p1();
    e.orig_p2 = f.lines[l].p2();
    w.edges.push_back(e);
  }

  w.adjacency.assign(w.nodes.size(), {});
  for (std::size_t ei = 0; ei < w.edges.size(); ++ei) {
    const auto& e = w.edges[ei];
    w.adjacency[e.node_i].emplace_back(e.node_j, static_cast<int>(ei));
    w.adjacency[e.node_j].emplace_back(e.node_i, static_cast<int>(ei));
  }
  return w;
}

inline std::map<int, int> connectivity_histogram(const Wireframe& w) {
  std::map<int, int> h;
  for (std::size_t i = 0; i < w.nodes.size(); ++i) ++h[w.degree(static_cast<int>(i))];
  return h;
}

inline json to_json(const Wireframe& w) {
  json nodes = json::array(), edges = json::array();
  for (const auto& n : w.nodes)
    nodes.push_back({{"x", n.x}, {"y", n.y}, {"score", n.score}, {"is_endpoint", n.is_endpoint}});
  for (const auto& e : w.edges)
    edges.push_back({{"i", e.node_i}, {"j", e.node_j}, {"score", e.score}, {"line", e.line_index}});
  return json{{"width", w.image_width}, {"height", w.image_height}, {"nodes", nodes}, {"edges", edges}};
}

}  // namespace wfm

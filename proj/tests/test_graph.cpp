#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "oimfb/graph.hpp"

using namespace oimfb;

namespace {
LoadResult load(const std::string& text, LoadOptions opts = {}) {
  std::istringstream in(text);
  return load_edge_list(in, opts);
}
}  // namespace

TEST_CASE("load: comments are skipped and nodes counted") {
  auto r = load("# c\n0 1\n1 2");
  CHECK(r.graph.node_count() == 3);
  CHECK(r.graph.edge_count() == 2);
  CHECK(r.report.data_lines == 2);
}

TEST_CASE("load: self-loops dropped and duplicates deduplicated") {
  auto r = load("0 0\n0 1\n0 1");
  CHECK(r.graph.node_count() == 2);
  CHECK(r.graph.edge_count() == 1);
  CHECK(r.report.self_loops_dropped == 1);
  CHECK(r.report.duplicates_deduped == 1);
}

TEST_CASE("load: dense remap in first-appearance order") {
  auto r = load("5 9\n9 5");
  const auto& g = r.graph;
  REQUIRE(g.node_count() == 2);
  CHECK(g.original_id(0) == 5);
  CHECK(g.original_id(1) == 9);
  CHECK(g.edge(0) == Edge{0, 1});
  CHECK(g.edge(1) == Edge{1, 0});
}

TEST_CASE("load: malformed lines report their line number") {
  auto line_of = [](const std::string& text) {
    try {
      load(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("0 1\n# x\n1 b\n") == 3);
  CHECK(line_of("0 1 2\n") == 1);
  CHECK(line_of("0\n") == 1);
  CHECK(line_of("0 1\n-1 2\n") == 2);
}

TEST_CASE("load: empty input is an error") {
  CHECK_THROWS_AS(load(""), GraphError);
  CHECK_THROWS_AS(load("# only comments\n\n"), GraphError);
}

TEST_CASE("load: symmetrize adds reverse edges without counting duplicates") {
  auto r = load("0 1\n1 0\n1 2", {.symmetrize = true});
  CHECK(r.graph.edge_count() == 4);
  CHECK(r.report.duplicates_deduped == 0);
  CHECK(r.graph.find_edge(2, 1) != r.graph.edge_count());
}

TEST_CASE("load: tabs and trailing whitespace are accepted") {
  auto r = load("0\t1  \r\n1 2\n");
  CHECK(r.graph.edge_count() == 2);
}

TEST_CASE("degrees of star, empty and path graphs") {
  auto s = degrees(testing::star(3));
  CHECK(s[0] == NodeDegree{3, 0});
  for (int i = 1; i <= 3; ++i) CHECK(s[i] == NodeDegree{0, 1});

  auto e = degrees(DirectedGraph(4, {}));
  for (const auto& d : e) CHECK(d == NodeDegree{0, 0});

  CHECK(degrees(testing::path3())[1] == NodeDegree{1, 1});
}

TEST_CASE("constructor rejects invalid edges") {
  CHECK_THROWS_AS(DirectedGraph(2, {{0, 0}}), GraphError);
  CHECK_THROWS_AS(DirectedGraph(2, {{0, 1}, {0, 1}}), GraphError);
  CHECK_THROWS_AS(DirectedGraph(2, {{0, 2}}), GraphError);
}

TEST_CASE("property: write then load is an identical graph") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    const std::size_t m = rng.below(std::min<std::size_t>(n * (n - 1), 80) + 1);
    DirectedGraph g = erdos_renyi_gnm(n, m, rng.next());
    std::ostringstream out;
    write_edge_list(out, g);
    std::istringstream in(out.str());
    auto back = load_edge_list(in);
    CHECK(back.report.dense_header);
    // Serialization is sorted, so compare edge sets over the same node count.
    std::vector<Edge> a(g.edges().begin(), g.edges().end()), b(back.graph.edges().begin(), back.graph.edges().end());
    auto key = [](const Edge& x, const Edge& y) { return std::tie(x.giving, x.receiving) < std::tie(y.giving, y.receiving); };
    std::sort(a.begin(), a.end(), key);
    std::sort(b.begin(), b.end(), key);
    CHECK(back.graph.node_count() == g.node_count());
    CHECK(a == b);

    // A second round trip is byte-for-byte stable.
    std::ostringstream again;
    write_edge_list(again, back.graph);
    CHECK(again.str() == out.str());
    std::istringstream in2(again.str());
    CHECK(load_edge_list(in2).graph == back.graph);
  }
}

TEST_CASE("property: degree sums equal the edge count") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    DirectedGraph g = testing::random_small_graph(rng, 40, 300);
    std::size_t out = 0, in = 0;
    for (const auto& d : degrees(g)) {
      out += d.out;
      in += d.in;
    }
    CHECK(out == g.edge_count());
    CHECK(in == g.edge_count());
  }
}

TEST_CASE("property: adjacency agrees with a linear scan") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    DirectedGraph g = testing::random_small_graph(rng, 25, 150);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      std::vector<EdgeId> outs, ins;
      for (EdgeId e = 0; e < g.edge_count(); ++e) {
        if (g.edge(e).giving == v) outs.push_back(e);
        if (g.edge(e).receiving == v) ins.push_back(e);
      }
      CHECK(std::vector<EdgeId>(g.out_edges(v).begin(), g.out_edges(v).end()) == outs);
      CHECK(std::vector<EdgeId>(g.in_edges(v).begin(), g.in_edges(v).end()) == ins);
    }
    for (EdgeId e = 0; e < g.edge_count(); ++e) CHECK(g.find_edge(g.edge(e).giving, g.edge(e).receiving) == e);
  }
}

TEST_CASE("generators are seeded and produce the requested size") {
  auto a = erdos_renyi_gnm(50, 400, 9), b = erdos_renyi_gnm(50, 400, 9);
  CHECK(a == b);
  CHECK(a.edge_count() == 400);
  CHECK_FALSE(a == erdos_renyi_gnm(50, 400, 10));
  CHECK_THROWS(erdos_renyi_gnm(3, 7, 1));

  auto s = skewed_out_degree(100, 800, 1.0, 4);
  CHECK(s.edge_count() == 800);
  auto d = degrees(s);
  std::size_t top = 0, bottom = 0;
  for (NodeId v = 0; v < 10; ++v) top += d[v].out;
  for (NodeId v = 90; v < 100; ++v) bottom += d[v].out;
  CHECK(top > 3 * bottom);
}

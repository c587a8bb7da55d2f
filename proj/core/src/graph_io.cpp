// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace autoqnn::graph {

namespace {
constexpr const char* kHeader = "# autoqnn-graph v1";
}

Graph load_graph(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kHeader) {
    throw std::runtime_error("graph file: missing header '" + std::string(kHeader) + "'");
  }
  Graph g;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "vertex") {
      Vertex v;
      std::string type;
      if (!(ls >> v.id >> type)) {
        throw std::runtime_error("graph file line " + std::to_string(lineno) +
                                 ": malformed vertex");
      }
      v.type = op_type_from_name(type);
      std::string kv;
      while (ls >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
          throw std::runtime_error("graph file line " + std::to_string(lineno) +
                                   ": attribute '" + kv + "' is not key=value");
        }
        v.attrs[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      g.add_vertex(std::move(v));
    } else if (kind == "edge") {
      Edge e;
      if (!(ls >> e.src >> e.dst >> e.slot)) {
        throw std::runtime_error("graph file line " + std::to_string(lineno) +
                                 ": malformed edge");
      }
      g.add_edge(std::move(e));
    } else {
      throw std::runtime_error("graph file line " + std::to_string(lineno) +
                               ": unknown declaration '" + kind + "'");
    }
  }
  return g;
}

Graph load_graph_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read graph file: " + path);
  return load_graph(is);
}

void dump_graph(const Graph& g, std::ostream& os) {
  os << kHeader << "\n";
  for (const auto& [id, v] : g.vertices()) {
    os << "vertex " << id << " " << op_type_name(v.type);
    for (const auto& [k, val] : v.attrs) os << " " << k << "=" << val;
    os << "\n";
  }
  auto edges = g.edges();
  std::sort(edges.begin(), edges.end());
  for (const Edge& e : edges) {
    os << "edge " << e.src << " " << e.dst << " " << e.slot << "\n";
  }
}

void dump_graph_file(const Graph& g, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write graph file: " + path);
  dump_graph(g, os);
}

}  // namespace autoqnn::graph

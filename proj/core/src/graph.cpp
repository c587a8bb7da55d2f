// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/graph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace autoqnn::graph {

std::string op_type_name(OpType t) {
  switch (t) {
    case OpType::Data: return "data";
    case OpType::MatMulFC: return "fc";
    case OpType::Conv: return "conv";
    case OpType::ReLU: return "relu";
    case OpType::Add: return "add";
    case OpType::BatchNormLike: return "batchnorm";
    case OpType::SoftmaxCE: return "softmax_ce";
    case OpType::Quantize: return "quantize";
  }
  throw std::logic_error("unknown op type");
}

OpType op_type_from_name(const std::string& name) {
  if (name == "data") return OpType::Data;
  if (name == "fc" || name == "matmul") return OpType::MatMulFC;
  if (name == "conv") return OpType::Conv;
  if (name == "relu") return OpType::ReLU;
  if (name == "add") return OpType::Add;
  if (name == "batchnorm") return OpType::BatchNormLike;
  if (name == "softmax_ce") return OpType::SoftmaxCE;
  if (name == "quantize") return OpType::Quantize;
  throw std::invalid_argument("unknown vertex type '" + name + "'");
}

void Graph::add_vertex(Vertex v) {
  if (vertices_.count(v.id)) {
    throw std::invalid_argument("graph: duplicate vertex id '" + v.id + "'");
  }
  vertices_.emplace(v.id, std::move(v));
}

void Graph::add_edge(Edge e) {
  if (!has_vertex(e.src) || !has_vertex(e.dst)) {
    throw std::invalid_argument("graph: edge " + e.src + "->" + e.dst +
                                " references unknown vertex");
  }
  edges_.push_back(std::move(e));
}

bool Graph::has_vertex(const std::string& id) const { return vertices_.count(id) > 0; }

const Vertex& Graph::vertex(const std::string& id) const {
  auto it = vertices_.find(id);
  if (it == vertices_.end()) {
    throw std::invalid_argument("graph: unknown vertex '" + id + "'");
  }
  return it->second;
}

std::size_t Graph::in_degree(const std::string& id) const {
  vertex(id);
  std::size_t n = 0;
  for (const Edge& e : edges_)
    if (e.dst == id) ++n;
  return n;
}

std::size_t Graph::out_degree(const std::string& id) const {
  vertex(id);
  std::size_t n = 0;
  for (const Edge& e : edges_)
    if (e.src == id) ++n;
  return n;
}

std::vector<Edge> Graph::in_edges(const std::string& id) const {
  std::vector<Edge> out;
  for (const Edge& e : edges_)
    if (e.dst == id) out.push_back(e);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> Graph::out_edges(const std::string& id) const {
  std::vector<Edge> out;
  for (const Edge& e : edges_)
    if (e.src == id) out.push_back(e);
  std::sort(out.begin(), out.end());
  return out;
}

bool Graph::structurally_equal(const Graph& other) const {
  if (vertices_.size() != other.vertices_.size()) return false;
  for (const auto& [id, v] : vertices_) {
    if (!other.has_vertex(id)) return false;
    if (other.vertex(id).type != v.type) return false;
  }
  auto a = edges_;
  auto b = other.edges_;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

ExpensiveSet default_expensive_set(const Graph& g) {
  ExpensiveSet s;
  for (const auto& [id, v] : g.vertices()) {
    if (v.type == OpType::MatMulFC || v.type == OpType::Conv) s.insert(id);
  }
  return s;
}

Diagnostics validate(const Graph& g) {
  Diagnostics d;

  // degree/kind consistency: data vertices source the graph, ops consume
  for (const auto& [id, v] : g.vertices()) {
    std::size_t indeg = g.in_degree(id);
    if (v.is_data() && indeg != 0) {
      d.problems.push_back("data vertex '" + id + "' has in-degree " +
                           std::to_string(indeg));
    }
    if (!v.is_data() && indeg == 0) {
      d.problems.push_back("op vertex '" + id + "' has in-degree 0");
    }
  }

  // acyclicity via Kahn's algorithm
  std::map<std::string, std::size_t> indeg;
  for (const auto& [id, v] : g.vertices()) indeg[id] = 0;
  for (const Edge& e : g.edges()) indeg[e.dst]++;
  std::deque<std::string> frontier;
  for (const auto& [id, n] : indeg)
    if (n == 0) frontier.push_back(id);
  std::size_t seen = 0;
  auto work = indeg;
  while (!frontier.empty()) {
    std::string id = frontier.front();
    frontier.pop_front();
    ++seen;
    for (const Edge& e : g.edges()) {
      if (e.src != id) continue;
      if (--work[e.dst] == 0) frontier.push_back(e.dst);
    }
  }
  if (seen != g.vertices().size()) {
    d.problems.push_back("graph contains a cycle");
  }

  // weak connectivity
  if (!g.vertices().empty()) {
    std::set<std::string> reached;
    std::deque<std::string> queue{g.vertices().begin()->first};
    reached.insert(g.vertices().begin()->first);
    while (!queue.empty()) {
      std::string id = queue.front();
      queue.pop_front();
      for (const Edge& e : g.edges()) {
        if (e.src == id && !reached.count(e.dst)) {
          reached.insert(e.dst);
          queue.push_back(e.dst);
        }
        if (e.dst == id && !reached.count(e.src)) {
          reached.insert(e.src);
          queue.push_back(e.src);
        }
      }
    }
    if (reached.size() != g.vertices().size()) {
      d.problems.push_back("graph is disconnected");
    }
  }

  return d;
}

std::vector<std::string> topo_order(const Graph& g) {
  std::map<std::string, std::size_t> indeg;
  for (const auto& [id, v] : g.vertices()) indeg[id] = 0;
  for (const Edge& e : g.edges()) indeg[e.dst]++;

  // std::set keeps the frontier sorted, so ties break by vertex id
  std::set<std::string> ready;
  for (const auto& [id, n] : indeg)
    if (n == 0) ready.insert(id);

  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const Edge& e : g.edges()) {
      if (e.src != id) continue;
      if (--indeg[e.dst] == 0) ready.insert(e.dst);
    }
  }
  if (order.size() != g.vertices().size()) {
    throw std::invalid_argument("topo_order: graph contains a cycle");
  }
  return order;
}

std::string quantizer_id_for(const Edge& e) {
  return "q." + e.src + "." + e.dst + "." + std::to_string(e.slot);
}

Graph qag_transform(const Graph& g, const ExpensiveSet& expensive, QagStats* stats) {
  Diagnostics diag = validate(g);
  if (!diag.ok()) {
    throw std::invalid_argument("qag: invalid input graph: " + diag.problems.front());
  }
  for (const std::string& id : expensive) {
    if (g.vertex(id).is_data()) {
      throw std::invalid_argument("qag: expensive set contains data vertex '" + id + "'");
    }
  }

  Graph out;
  std::set<std::string> placed;  // V' restricted to original vertices

  // V' starts as the 0-in-degree (data) vertices, E' empty
  for (const auto& [id, v] : g.vertices()) {
    if (g.in_degree(id) == 0) {
      out.add_vertex(v);
      placed.insert(id);
    }
  }

  auto frontier = [&]() {
    std::set<std::string> f;
    for (const Edge& e : g.edges()) {
      if (placed.count(e.src) && !placed.count(e.dst)) f.insert(e.dst);
    }
    return f;
  };

  std::size_t outer = 0;
  std::size_t added = 0;
  std::set<std::string> I = frontier();
  while (!I.empty()) {
    ++outer;
    if (outer > g.vertices().size()) {
      throw std::logic_error("qag: worklist failed to make progress");
    }
    for (const std::string& vj : I) {
      // move vj only once all of its producers are placed
      bool all_in = true;
      for (const Edge& e : g.in_edges(vj)) {
        if (!placed.count(e.src)) {
          all_in = false;
          break;
        }
      }
      if (!all_in) continue;
      out.add_vertex(g.vertex(vj));
      placed.insert(vj);
      for (const Edge& e : g.in_edges(vj)) {
        if (expensive.count(vj)) {
          Vertex q;
          q.id = quantizer_id_for(e);
          q.type = OpType::Quantize;
          out.add_vertex(q);
          out.add_edge({e.src, q.id, e.slot});
          out.add_edge({q.id, e.dst, e.slot});
          ++added;
        } else {
          out.add_edge(e);
        }
      }
    }
    I = frontier();
  }

  if (placed.size() != g.vertices().size()) {
    throw std::logic_error("qag: some vertices were never placed");
  }
  if (stats) {
    stats->outer_iterations = outer;
    stats->quantizers_added = added;
  }
  return out;
}

Graph contract_quantizers(const Graph& g) {
  Graph out;
  for (const auto& [id, v] : g.vertices()) {
    if (v.type != OpType::Quantize) out.add_vertex(v);
  }
  std::map<std::string, Edge> from_q;
  for (const Edge& e : g.edges()) {
    if (g.vertex(e.src).type == OpType::Quantize) {
      if (from_q.count(e.src)) {
        throw std::invalid_argument("contract: quantizer '" + e.src +
                                    "' has multiple outgoing edges");
      }
      from_q[e.src] = e;
    }
  }
  // splice <src, q...q, dst> back into <src, dst>, following quantizer chains
  for (const Edge& e : g.edges()) {
    if (g.vertex(e.src).type == OpType::Quantize) continue;
    if (g.vertex(e.dst).type != OpType::Quantize) {
      out.add_edge(e);
      continue;
    }
    std::string cur = e.dst;
    while (true) {
      auto it = from_q.find(cur);
      if (it == from_q.end()) {
        throw std::invalid_argument("contract: quantizer '" + cur +
                                    "' has no outgoing edge");
      }
      if (g.vertex(it->second.dst).type != OpType::Quantize) {
        out.add_edge({e.src, it->second.dst, e.slot});
        break;
      }
      cur = it->second.dst;
    }
  }
  return out;
}

}  // namespace autoqnn::graph

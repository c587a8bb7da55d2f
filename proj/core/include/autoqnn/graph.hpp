// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace autoqnn::graph {

enum class OpType { Data, MatMulFC, Conv, ReLU, Add, BatchNormLike, SoftmaxCE, Quantize };

std::string op_type_name(OpType t);
OpType op_type_from_name(const std::string& name);

struct Vertex {
  std::string id;
  OpType type = OpType::Data;
  std::map<std::string, std::string> attrs;

  bool is_data() const { return type == OpType::Data; }
};

struct Edge {
  std::string src;
  std::string dst;
  int slot = 0;

  auto operator<=>(const Edge&) const = default;
};

/// The computing graph. Vertices are keyed by id; edges carry a tensor slot
/// so parallel edges between the same pair stay distinct. Immutable after
/// construction in normal use; transforms return new graphs.
class Graph {
 public:
  void add_vertex(Vertex v);
  void add_edge(Edge e);

  bool has_vertex(const std::string& id) const;
  const Vertex& vertex(const std::string& id) const;
  const std::map<std::string, Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t in_degree(const std::string& id) const;
  std::size_t out_degree(const std::string& id) const;
  std::vector<Edge> in_edges(const std::string& id) const;   // sorted
  std::vector<Edge> out_edges(const std::string& id) const;  // sorted

  bool structurally_equal(const Graph& other) const;

 private:
  std::map<std::string, Vertex> vertices_;
  std::vector<Edge> edges_;
};

/// Ids of the compute-dominant vertices whose inputs get quantized.
using ExpensiveSet = std::set<std::string>;

/// Conv and FC vertices, the default expensive set.
ExpensiveSet default_expensive_set(const Graph& g);

struct Diagnostics {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

/// Reports acyclicity, connectivity and degree/kind consistency.
Diagnostics validate(const Graph& g);

/// Deterministic topological order; ties broken by vertex id. Throws on cycles.
std::vector<std::string> topo_order(const Graph& g);

struct QagStats {
  std::size_t outer_iterations = 0;
  std::size_t quantizers_added = 0;
};

/// Quantized architecture generation: every edge into an expensive vertex is
/// split through a fresh Quantize vertex. Implemented as the frontier-sweep
/// worklist, O(|V||E|). Original vertex ids are preserved; quantizer ids are
/// derived from the replaced edge's endpoints.
Graph qag_transform(const Graph& g, const ExpensiveSet& expensive,
                    QagStats* stats = nullptr);

/// Inverse structural edit for testing: drop Quantize vertices, reconnecting
/// their endpoints with the original slot.
Graph contract_quantizers(const Graph& g);

std::string quantizer_id_for(const Edge& e);

}  // namespace autoqnn::graph

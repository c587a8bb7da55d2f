// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

#include "autoqnn/graph.hpp"

namespace autoqnn::graph {

/// Text format, one declaration per line:
///
///   # autoqnn-graph v1
///   vertex <id> <type> [key=value ...]
///   edge <src> <dst> <slot>
///
/// Load of a dump of a load is structurally the identity.
Graph load_graph(std::istream& is);
Graph load_graph_file(const std::string& path);
void dump_graph(const Graph& g, std::ostream& os);
void dump_graph_file(const Graph& g, const std::string& path);

}  // namespace autoqnn::graph

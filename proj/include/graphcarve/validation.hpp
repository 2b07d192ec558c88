#pragma once

#include <string>
#include <vector>

#include "graphcarve/qstate.hpp"

namespace graphcarve {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Every labelled connected simple graph on n vertices.
std::vector<GraphSpec> connected_graphs(int n);

/// Largest back-degree under attach_order().
int max_back_degree(const GraphSpec& g);

/// Oracle-equivalence and invariant checks over the carving channel and the
/// compiled protocols. Graph checks cover every connected graph up to
/// `max_vertices` whose greedy back-degree is at most 3.
std::vector<CheckResult> run_validation_suite(int max_vertices = 5);

}  // namespace graphcarve

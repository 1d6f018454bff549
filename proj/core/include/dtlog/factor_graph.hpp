#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dtlog/parser.hpp"

namespace dtlog {

// One factor per body literal, plus `any` connectors added to join components.
struct FactorNode {
  std::string predicate;
  std::vector<int> vars;  // variable index per argument slot
  int literal_index = -1; // position in the clause body; -1 for connectors

  bool connector() const { return literal_index < 0; }
  bool unary() const { return vars.size() == 1; }
};

// Bipartite graph of a clause's logical variables and literal factors.
struct FactorGraph {
  std::string clause_text;
  Mode mode = Mode::io;
  std::vector<std::string> variables;
  std::vector<FactorNode> factors;
  int input_var = -1;
  int output_var = -1;

  int variable_index(std::string_view name) const;
  // Factors touching `var`, in factor order (body order, connectors last).
  std::vector<int> neighbors(int var) const;
  std::size_t node_count() const { return variables.size() + factors.size(); }
  std::size_t edge_count() const;
  // Component label per variable, labels numbered in order of first variable.
  std::vector<int> components(int* count = nullptr) const;
};

FactorGraph build_factor_graph(const Clause& clause, Mode mode);

// Adds `any` factors until the graph is connected: each orphan component's
// lexicographically-first variable is joined to the lexicographically-first
// variable of the component holding the output variable.
FactorGraph connect_components(FactorGraph graph);

// Variables on some cycle, or nullopt for a tree.
std::optional<std::vector<std::string>> find_cycle(const FactorGraph& graph);

// Throws CompileError naming the clause and the cycle's variables.
void check_polytree(const FactorGraph& graph);

// build + connect + check.
FactorGraph clause_graph(const Clause& clause, Mode mode);

std::string dump_graph(const FactorGraph& graph);

}  // namespace dtlog

#include "dtlog/factor_graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dtlog/error.hpp"

namespace dtlog {

int FactorGraph::variable_index(std::string_view name) const {
  auto it = std::find(variables.begin(), variables.end(), name);
  return it == variables.end() ? -1 : static_cast<int>(it - variables.begin());
}

std::vector<int> FactorGraph::neighbors(int var) const {
  std::vector<int> out;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto& vs = factors[f].vars;
    if (std::find(vs.begin(), vs.end(), var) != vs.end()) out.push_back(static_cast<int>(f));
  }
  return out;
}

std::size_t FactorGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& f : factors) n += f.vars.size();
  return n;
}

std::vector<int> FactorGraph::components(int* count) const {
  std::vector<int> parent(variables.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& f : factors) {
    for (std::size_t i = 1; i < f.vars.size(); ++i) {
      int a = find(f.vars[0]), b = find(f.vars[i]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<int> label(variables.size(), -1);
  std::vector<int> root_label(variables.size(), -1);
  int next = 0;
  for (std::size_t v = 0; v < variables.size(); ++v) {
    int r = find(static_cast<int>(v));
    if (root_label[r] < 0) root_label[r] = next++;
    label[v] = root_label[r];
  }
  if (count) *count = next;
  return label;
}

FactorGraph build_factor_graph(const Clause& clause, Mode mode) {
  FactorGraph g;
  g.clause_text = to_string(clause);
  g.mode = mode;
  auto var_id = [&](const std::string& name) {
    int id = g.variable_index(name);
    if (id < 0) {
      id = static_cast<int>(g.variables.size());
      g.variables.push_back(name);
    }
    return id;
  };
  for (std::size_t i = 0; i < clause.body.size(); ++i) {
    const Literal& lit = clause.body[i];
    FactorNode node;
    node.predicate = lit.predicate;
    node.literal_index = static_cast<int>(i);
    for (const Term& t : lit.args) {
      if (!t.is_variable()) {
        throw CompileError("constant '" + t.name + "' in '" + g.clause_text + "'; desugar first");
      }
      node.vars.push_back(var_id(t.name));
    }
    g.factors.push_back(std::move(node));
  }
  if (clause.head.arity() != 2) {
    throw CompileError("clause head of '" + g.clause_text + "' must be binary");
  }
  const std::string& first = clause.head.args[0].name;
  const std::string& second = clause.head.args[1].name;
  g.input_var = g.variable_index(mode == Mode::io ? first : second);
  g.output_var = g.variable_index(mode == Mode::io ? second : first);
  if (g.input_var < 0 || g.output_var < 0) {
    throw CompileError("head variable of '" + g.clause_text + "' does not appear in the body");
  }
  return g;
}

FactorGraph connect_components(FactorGraph g) {
  while (true) {
    int count = 0;
    std::vector<int> label = g.components(&count);
    if (count <= 1) return g;

    // Lexicographically-first variable of every component.
    std::vector<int> first(static_cast<std::size_t>(count), -1);
    for (std::size_t v = 0; v < g.variables.size(); ++v) {
      int& f = first[label[v]];
      if (f < 0 || g.variables[v] < g.variables[f]) f = static_cast<int>(v);
    }
    const int main = label[g.output_var];
    int orphan = -1;
    for (int c = 0; c < count; ++c) {
      if (c == main) continue;
      if (orphan < 0 || g.variables[first[c]] < g.variables[first[orphan]]) orphan = c;
    }
    g.factors.push_back(FactorNode{std::string(kAnyPredicate), {first[orphan], first[main]}, -1});
  }
}

std::optional<std::vector<std::string>> find_cycle(const FactorGraph& g) {
  // Nodes: variables [0, V), factors [V, V+F). One edge per factor slot, so a
  // factor touching the same variable twice forms a 2-cycle.
  const int nv = static_cast<int>(g.variables.size());
  const int n = static_cast<int>(g.node_count());
  struct Edge { int to; int id; };
  std::vector<std::vector<Edge>> adj(static_cast<std::size_t>(n));
  int edge_id = 0;
  for (std::size_t f = 0; f < g.factors.size(); ++f) {
    for (int v : g.factors[f].vars) {
      adj[v].push_back({nv + static_cast<int>(f), edge_id});
      adj[nv + f].push_back({v, edge_id});
      ++edge_id;
    }
  }
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<int> parent_edge(static_cast<std::size_t>(n), -1);
  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on stack, 2 done

  std::vector<int> cycle_nodes;
  auto dfs = [&](auto&& self, int u) -> bool {
    state[u] = 1;
    for (const Edge& e : adj[u]) {
      if (e.id == parent_edge[u]) continue;
      if (state[e.to] == 1) {
        for (int x = u; x != e.to; x = parent[x]) cycle_nodes.push_back(x);
        cycle_nodes.push_back(e.to);
        return true;
      }
      if (state[e.to] == 0) {
        parent[e.to] = u;
        parent_edge[e.to] = e.id;
        if (self(self, e.to)) return true;
      }
    }
    state[u] = 2;
    return false;
  };
  for (int s = 0; s < n; ++s) {
    if (state[s] == 0 && dfs(dfs, s)) {
      std::vector<std::string> names;
      for (int x : cycle_nodes) {
        if (x < nv) names.push_back(g.variables[x]);
      }
      std::sort(names.begin(), names.end());
      names.erase(std::unique(names.begin(), names.end()), names.end());
      return names;
    }
  }
  return std::nullopt;
}

void check_polytree(const FactorGraph& g) {
  if (auto cycle = find_cycle(g)) {
    std::string vars;
    for (const auto& v : *cycle) vars += (vars.empty() ? "" : ", ") + v;
    throw CompileError("clause graph of '" + g.clause_text + "' is not a tree (cycle through " +
                       vars + ")");
  }
  int count = 0;
  g.components(&count);
  if (count > 1) throw CompileError("clause graph of '" + g.clause_text + "' is disconnected");
}

FactorGraph clause_graph(const Clause& clause, Mode mode) {
  FactorGraph g = connect_components(build_factor_graph(clause, mode));
  check_polytree(g);
  return g;
}

std::string dump_graph(const FactorGraph& g) {
  std::ostringstream out;
  out << "graph " << g.clause_text << " mode " << to_string(g.mode) << "\n";
  out << "  input " << g.variables[g.input_var] << " output " << g.variables[g.output_var] << "\n";
  for (std::size_t v = 0; v < g.variables.size(); ++v) {
    out << "  var " << g.variables[v] << ":";
    for (int f : g.neighbors(static_cast<int>(v))) out << " f" << f;
    out << "\n";
  }
  for (std::size_t f = 0; f < g.factors.size(); ++f) {
    const auto& node = g.factors[f];
    out << "  factor f" << f << " " << node.predicate << "(";
    for (std::size_t i = 0; i < node.vars.size(); ++i) {
      out << (i ? "," : "") << g.variables[node.vars[i]];
    }
    out << ")" << (node.connector() ? " [connector]" : "") << "\n";
  }
  return out.str();
}

}  // namespace dtlog

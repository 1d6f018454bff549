#include "dtlog/grid.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "dtlog/error.hpp"
#include "dtlog/random.hpp"

namespace dtlog {

std::string cell_name(int row, int col) {
  return "c_" + std::to_string(row) + "_" + std::to_string(col);
}

std::int64_t grid_edge_count(int n) {
  const std::int64_t m = n;
  return 2 * (2 * m * (m - 1) + 2 * (m - 1) * (m - 1)) + m * m;
}

std::pair<int, int> nearest_corner(int n, int row, int col) {
  const std::array<std::pair<int, int>, 4> corners{{{1, 1}, {1, n}, {n, 1}, {n, n}}};
  std::pair<int, int> best = corners[0];
  int best_d = -1;
  for (const auto& [r, c] : corners) {
    int d = std::max(std::abs(r - row), std::abs(c - col));
    if (best_d < 0 || d < best_d) {
      best = {r, c};
      best_d = d;
    }
  }
  return best;
}

GridData generate_grid(const GridSpec& spec) {
  if (spec.n < 2) throw Error("grid side must be at least 2");
  const int n = spec.n;
  Rng rng(spec.seed);
  GridData data;

  std::ostringstream facts;
  facts.precision(17);
  for (int r = 1; r <= n; ++r) {
    for (int c = 1; c <= n; ++c) {
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          int r2 = r + dr;
          int c2 = c + dc;
          if (r2 < 1 || r2 > n || c2 < 1 || c2 > n) continue;
          double w = spec.base_weight + rng.uniform(-spec.jitter, spec.jitter);
          facts << "edge\t" << cell_name(r, c) << '\t' << cell_name(r2, c2) << '\t' << w << '\n';
        }
      }
    }
  }
  data.facts = facts.str();
  data.rules =
      "path(X,Y) :- edge(X,Y).\n"
      "path(X,Y) :- edge(X,Z), path(Z,Y).\n";

  std::vector<Example> all;
  for (int r = 1; r <= n; ++r) {
    for (int c = 1; c <= n; ++c) {
      auto [cr, cc] = nearest_corner(n, r, c);
      all.push_back(Example{Query{"path", Mode::io, cell_name(r, c)}, {cell_name(cr, cc)}});
    }
  }
  rng.shuffle(all.begin(), all.end());
  const std::size_t test_size = all.size() / 3;
  data.test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(test_size));
  data.train.assign(all.begin() + static_cast<std::ptrdiff_t>(test_size), all.end());
  return data;
}

void write_grid(const GridData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) {
      throw Error("cannot write " + (dir / name).string());
    }
  };
  write("grid.facts", data.facts);
  write("grid.rules", data.rules);
  write("train.examples", serialize_examples(data.train));
  write("test.examples", serialize_examples(data.test));
}

}  // namespace dtlog

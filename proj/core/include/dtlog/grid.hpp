#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dtlog/learner.hpp"

namespace dtlog {

// n x n grid, each cell linked to its 8 neighbours and to itself.
struct GridSpec {
  int n = 16;
  std::uint64_t seed = 0;
  // Near 0.2 the depth-10 path scores stay moderate, so the first gradient
  // steps do not clip the edges away.
  double base_weight = 0.19;
  double jitter = 0.02;
};

struct GridData {
  std::string facts;
  std::string rules;
  std::vector<Example> train;
  std::vector<Example> test;
};

std::string cell_name(int row, int col);  // 1-based
std::int64_t grid_edge_count(int n);
// The corner nearest to a cell in Chebyshev distance, ties to the lowest
// row-major cell.
std::pair<int, int> nearest_corner(int n, int row, int col);

GridData generate_grid(const GridSpec& spec);
// Writes grid.facts, grid.rules, train.examples and test.examples.
void write_grid(const GridData& data, const std::filesystem::path& dir);

}  // namespace dtlog

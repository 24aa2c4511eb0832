#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdcompat/compat.hpp"

namespace mdcompat {

/// Parsed grid file: one GridSpec per section plus optional [run] settings.
struct SimulationConfig {
  std::vector<GridSpec> grids;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

/// Valid keys of a grid section, in documentation order.
const std::vector<std::string>& grid_keys();

/// Sections-and-keys text. Lines are `key = v1, v2, ...`; `#` starts a
/// comment. Each `[name]` section is a sub-grid except `[run]`, which takes
/// `seed` and `workers`. Keys before any section form the first sub-grid.
SimulationConfig parse_grid_config(std::string_view text, const std::string& source = "grid");
SimulationConfig load_grid_config(const std::filesystem::path& path);

/// "paper": the full 3072-scenario grid at 50,000/50,000 and 100 iterations.
/// "desk": six continuous-X1 scenarios at 5,000/5,000 and 200 iterations.
std::vector<GridSpec> preset_grids(std::string_view name);

/// Renders grids back into the grid-file format.
std::string format_grid_config(const std::vector<GridSpec>& grids);

}  // namespace mdcompat

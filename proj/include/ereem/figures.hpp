#pragma once

// Plot-ready dataset bundles, one per supported figure id.

#include <cstdint>
#include <string>
#include <vector>

#include "ereem/io.hpp"
#include "ereem/nv_model.hpp"
#include "ereem/report.hpp"

namespace ereem {

struct FigureContext {
  SpeciesConstants constants = SpeciesConstants::n15();
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

const std::vector<std::string>& figure_ids();
bool is_figure_id(const std::string& id);

/// Writes the bundle files through `out` and returns a summary of the key
/// numbers. Throws std::invalid_argument for an unknown id.
Json reproduce_figure(const std::string& id, const FigureContext& ctx, OutputWriter& out);

}  // namespace ereem

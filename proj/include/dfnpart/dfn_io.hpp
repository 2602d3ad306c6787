// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_DFN_IO_HPP
#define DFNPART_DFN_IO_HPP

#include "dfnpart/geometry.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace dfnpart {

// JSON layout:
//   { "fractures":    [ {"id": 1, "vertices": [[x,y,z], ...], "transmissivity": 1.0}, ... ],
//     "traces":       [ {"id": 1, "endpoints": [[x,y,z],[x,y,z]], "it_pair": [r,s]}, ... ],
//     "cross_points": [ {"id": 1, "point": [x,y,z], "icp_triple": [r,s,q], "incident_traces": [a,b,c]}, ... ],
//     "eps_geom": 1e-9 }
// "traces", "cross_points", "transmissivity" and "eps_geom" are optional on load;
// missing traces / cross points are recomputed.

std::string dfn_to_string(const Dfn& dfn);
Dfn dfn_from_string(std::string_view text);

/// Throws ParseError (with line or field path) or GeometryError (invariant violation).
Dfn load_dfn(const std::filesystem::path& path);
void save_dfn(const Dfn& dfn, const std::filesystem::path& path);

} // namespace dfnpart

#endif // DFNPART_DFN_IO_HPP

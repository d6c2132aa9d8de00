#pragma once

#include <cstdint>

#include "waveshape/grid.hpp"
#include "waveshape/mesh.hpp"

namespace waveshape {

// Classic 256-entry marching-cubes tables (Lorensen & Cline case family).
// kMcEdgeTable[c] flags the intersected cell edges of configuration c;
// kMcTriTable[c] lists up to five triangles as edge-index triples, -1 ended.
extern const std::uint16_t kMcEdgeTable[256];
extern const std::int8_t kMcTriTable[256][16];

/// Extract the iso-level triangle mesh from a scalar volume. Vertices are
/// placed by linear interpolation along sign-changing cell edges and welded
/// across shared edges by exact edge-key hashing; triangles are oriented with
/// normals pointing toward increasing field values. Grid samples exactly at
/// the iso level are perturbed by 1e-9 * tau to avoid degenerate topology.
/// A volume without sign changes yields an empty mesh.
TriangleMesh marching_cubes(const VolumeGrid& volume, double iso = 0.0);

/// True iff every edge is shared by exactly two triangles with opposite
/// orientation (vacuously true for an empty mesh).
bool mesh_is_watertight(const TriangleMesh& mesh);

}  // namespace waveshape

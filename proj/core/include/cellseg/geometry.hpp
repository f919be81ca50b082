#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cellseg/box.hpp"
#include "cellseg/volume.hpp"

namespace cellseg {

long long intersection_volume(const Box3D& a, const Box3D& b) noexcept;
long long intersection_area(const Box2D& a, const Box2D& b) noexcept;

/// |a ∩ b| / |a ∪ b| over voxel counts. Symmetric, 0 when disjoint.
double box3d_iou(const Box3D& a, const Box3D& b) noexcept;
/// |a ∩ b| / min(|a|, |b|).
double box3d_intersection_over_min(const Box3D& a, const Box3D& b) noexcept;

/// In-plane rectangle IoU. Slices may differ; throws ViewMismatch when views differ.
double box2d_iou(const Box2D& a, const Box2D& b);
double box2d_intersection_over_min(const Box2D& a, const Box2D& b);

/// Voxel set of one instance: sorted linear indices inside a volume of `dims`.
struct VoxelSet {
  Dims dims;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

VoxelSet instance_voxels(const LabelVolume& labels, std::uint32_t id);

/// Exact voxel-set IoU. Throws DimsMismatch for different dims and
/// EmptyOperands when both sets are empty.
double mask_iou(const VoxelSet& a, const VoxelSet& b);

/// Tight half-open bound of the instance's voxels, or nullopt when absent.
std::optional<Box3D> tight_box(const LabelVolume& labels, std::uint32_t id);

/// Tight bounds of all instances indexed by id (entry 0 unused; absent ids are
/// nullopt). Single pass over the volume.
std::vector<std::optional<Box3D>> tight_boxes(const LabelVolume& labels);

}  // namespace cellseg

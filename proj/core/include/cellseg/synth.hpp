#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellseg/box.hpp"
#include "cellseg/volume.hpp"

namespace cellseg {

using Rng = std::mt19937_64;

enum class CompartmentKind : std::uint8_t { Medium = 0, Euchromatin = 1, Heterochromatin = 2 };

/// Contact energies of the lattice model. Pairs inside one cell use the
/// intra-cell table; any pair of sites owned by two different cells pays
/// `cell_cell` (the surface-tension knob); cell/medium pairs pay by kind.
struct ContactEnergies {
  double cell_medium_eu = 16.0;
  double cell_medium_het = 30.0;
  double cell_cell = 12.0;
  double eu_eu = 6.0;
  double eu_het = 8.0;
  double het_het = 14.0;

  double between(CompartmentKind a, CompartmentKind b, bool same_cell) const noexcept;

  friend bool operator==(const ContactEnergies&, const ContactEnergies&) = default;
};

struct GenConfig {
  int cell_count = 128;
  Dims lattice_dims{84, 84, 84};
  Dims crop_dims{64, 64, 64};
  int upscale_factor = 2;

  int mc_sweeps = 200;
  double temperature = 10.0;
  double volume_stiffness = 2.0;
  ContactEnergies contact{};

  int seed_radius = 4;
  int cell_target_volume = 2400;
  int min_heterochromatin = 5;
  int max_heterochromatin = 9;
  double heterochromatin_fraction = 0.15;
  int placement_attempts = 10000;

  double euchromatin_level = 0.45;
  double heterochromatin_level = 0.85;
  double mask_smoothing_sigma = 1.0;
  double blur_sigma_iso = 1.5;  // profile 2
  double blur_sigma_xy = 1.0;   // profile 3
  double blur_sigma_z = 2.5;    // profile 3
  double noise_sigma = 0.05;
  int profile = 3;
  Dtype output_dtype = Dtype::U8;

  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  Dims output_dims() const noexcept {
    return {crop_dims.nx * upscale_factor, crop_dims.ny * upscale_factor,
            crop_dims.nz * upscale_factor};
  }

  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

nlohmann::json to_json(const GenConfig& c);

struct Compartment {
  std::uint32_t cell_id = 0;  // 0 for the medium
  CompartmentKind kind = CompartmentKind::Medium;
  long long target_volume = 0;
  long long volume = 0;

  friend bool operator==(const Compartment&, const Compartment&) = default;
};

/// Lattice of compartment owners. `compartments[0]` is the medium; every site
/// stores an index into `compartments`.
struct CpmLattice {
  Grid<std::uint32_t> owner;
  std::vector<Compartment> compartments;

  const Dims& dims() const noexcept { return owner.dims(); }

  /// Cell ids that own at least one site, ascending.
  std::vector<std::uint32_t> cell_ids() const;
  /// Compartment indices belonging to `cell`, ascending.
  std::vector<std::uint32_t> compartments_of(std::uint32_t cell) const;
  /// Recounts `volume` of every compartment from the site grid.
  void recount_volumes();

  friend bool operator==(const CpmLattice&, const CpmLattice&) = default;
};

/// Places `cell_count` non-overlapping seed spheres and partitions each into
/// two euchromatin halves and k heterochromatin blobs. Throws PlacementOverflow.
CpmLattice seed_cells(const GenConfig& config, Rng& rng);

/// Energy change of copying `new_owner` into `site`, from the local neighborhood
/// and the two affected volume terms.
double delta_energy(const CpmLattice& lattice, const GenConfig& config, std::size_t site,
                    std::uint32_t new_owner);

struct ExtinctionEvent {
  int sweep = 0;
  std::uint32_t compartment = 0;
  std::uint32_t cell_id = 0;
};

struct RelaxStats {
  long long proposals = 0;
  long long accepted = 0;
  std::vector<ExtinctionEvent> extinctions;
};

/// Metropolis site-copy dynamics over 6-neighborhoods; `mc_sweeps` sweeps of
/// one proposal per site each.
CpmLattice cpm_relax(CpmLattice lattice, const GenConfig& config, Rng& rng,
                     RelaxStats* stats = nullptr);

/// Centered crop; throws CropTooLarge.
CpmLattice crop_lattice(const CpmLattice& lattice, const Dims& crop_dims);

/// Number of 6-neighbor site pairs owned by two different cells.
long long cell_contact_area(const CpmLattice& lattice);

struct RenderedVolume {
  IntensityVolume image;
  LabelVolume labels;
};

/// Upscale, smooth per-cell masks, paint compartment intensities, apply the
/// profile's blur and additive noise.
RenderedVolume render_volume(const CpmLattice& lattice, const GenConfig& config, Rng& rng);

/// Seed -> relax -> crop using the config seed. Shared by every profile.
CpmLattice simulate_lattice(const GenConfig& config, RelaxStats* stats = nullptr);

/// Full generation of one volume as a pure function of the config.
RenderedVolume generate_volume(const GenConfig& config, RelaxStats* stats = nullptr);
/// Renders an already simulated lattice with the config's profile and seed.
RenderedVolume render_for_config(const CpmLattice& lattice, const GenConfig& config);

struct DatasetEntry {
  int index = 0;
  std::uint64_t seed = 0;
  std::string image;     // volume base name
  std::string labels;    // volume base name
  std::string boxes3d;   // JSON file
  std::string boxes2d;   // JSON-lines file
  int instances = 0;
};

/// Writes `count` volumes (seeds seed+index) plus `manifest.json`; returns the
/// manifest. Throws IoFailure.
nlohmann::json gen_dataset(const GenConfig& config, int count,
                           const std::filesystem::path& out_dir, int workers = 1);

}  // namespace cellseg

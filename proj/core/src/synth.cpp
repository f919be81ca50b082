#include "cellseg/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "cellseg/detect.hpp"
#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"
#include "cellseg/fusion.hpp"
#include "cellseg/imgproc.hpp"
#include "cellseg/volume_io.hpp"

namespace cellseg {

using nlohmann::json;

double ContactEnergies::between(CompartmentKind a, CompartmentKind b, bool same_cell) const noexcept {
  using K = CompartmentKind;
  if (a == K::Medium && b == K::Medium) return 0.0;
  if (a == K::Medium || b == K::Medium) {
    const K cell_kind = a == K::Medium ? b : a;
    return cell_kind == K::Euchromatin ? cell_medium_eu : cell_medium_het;
  }
  if (!same_cell) return cell_cell;
  if (a == K::Euchromatin && b == K::Euchromatin) return eu_eu;
  if (a == K::Heterochromatin && b == K::Heterochromatin) return het_het;
  return eu_het;
}

void GenConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::ConfigError, std::string("gen.") + what);
  };
  require(cell_count >= 1, "cell_count must be >= 1");
  require(lattice_dims.positive(), "lattice dims must be positive");
  require(crop_dims.positive(), "crop dims must be positive");
  require(crop_dims.nx <= lattice_dims.nx && crop_dims.ny <= lattice_dims.ny &&
              crop_dims.nz <= lattice_dims.nz,
          "crop dims must not exceed lattice dims");
  require(upscale_factor >= 1, "upscale_factor must be >= 1");
  require(mc_sweeps >= 0, "mc_sweeps must be >= 0");
  require(temperature >= 0.0, "temperature must be >= 0");
  require(volume_stiffness >= 0.0, "volume_stiffness must be >= 0");
  require(seed_radius >= 2, "seed_radius must be >= 2");
  require(min_heterochromatin >= 1 && min_heterochromatin <= max_heterochromatin,
          "heterochromatin compartment range must satisfy 1 <= min <= max");
  require(heterochromatin_fraction > 0.0 && heterochromatin_fraction < 1.0,
          "heterochromatin_fraction must lie in (0,1)");
  require(cell_target_volume >= 2 + max_heterochromatin,
          "cell_target_volume too small for its compartments");
  require(placement_attempts >= 1, "placement_attempts must be >= 1");
  require(euchromatin_level >= 0.0 && euchromatin_level <= 1.0, "euchromatin_level must lie in [0,1]");
  require(heterochromatin_level >= 0.0 && heterochromatin_level <= 1.0,
          "heterochromatin_level must lie in [0,1]");
  require(mask_smoothing_sigma >= 0.0 && blur_sigma_iso >= 0.0 && blur_sigma_xy >= 0.0 &&
              blur_sigma_z >= 0.0 && noise_sigma >= 0.0,
          "sigmas must be >= 0");
  require(profile >= 1 && profile <= 3, "profile must be 1, 2 or 3");
}

json to_json(const GenConfig& c) {
  auto dims = [](const Dims& d) { return json::array({d.nx, d.ny, d.nz}); };
  return json{
      {"cell_count", c.cell_count},
      {"lattice_dims", dims(c.lattice_dims)},
      {"crop_dims", dims(c.crop_dims)},
      {"upscale_factor", c.upscale_factor},
      {"mc_sweeps", c.mc_sweeps},
      {"temperature", c.temperature},
      {"volume_stiffness", c.volume_stiffness},
      {"contact",
       {{"cell_medium_eu", c.contact.cell_medium_eu},
        {"cell_medium_het", c.contact.cell_medium_het},
        {"cell_cell", c.contact.cell_cell},
        {"eu_eu", c.contact.eu_eu},
        {"eu_het", c.contact.eu_het},
        {"het_het", c.contact.het_het}}},
      {"seed_radius", c.seed_radius},
      {"cell_target_volume", c.cell_target_volume},
      {"min_heterochromatin", c.min_heterochromatin},
      {"max_heterochromatin", c.max_heterochromatin},
      {"heterochromatin_fraction", c.heterochromatin_fraction},
      {"placement_attempts", c.placement_attempts},
      {"euchromatin_level", c.euchromatin_level},
      {"heterochromatin_level", c.heterochromatin_level},
      {"mask_smoothing_sigma", c.mask_smoothing_sigma},
      {"blur_sigma_iso", c.blur_sigma_iso},
      {"blur_sigma_xy", c.blur_sigma_xy},
      {"blur_sigma_z", c.blur_sigma_z},
      {"noise_sigma", c.noise_sigma},
      {"profile", c.profile},
      {"output_dtype", std::string(to_string(c.output_dtype))},
      {"seed", c.seed},
  };
}

// ---- lattice ---------------------------------------------------------------

std::vector<std::uint32_t> CpmLattice::cell_ids() const {
  std::vector<std::uint32_t> ids;
  for (std::size_t c = 1; c < compartments.size(); ++c) {
    if (compartments[c].volume > 0) ids.push_back(compartments[c].cell_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::uint32_t> CpmLattice::compartments_of(std::uint32_t cell) const {
  std::vector<std::uint32_t> out;
  for (std::size_t c = 1; c < compartments.size(); ++c) {
    if (compartments[c].cell_id == cell) out.push_back(static_cast<std::uint32_t>(c));
  }
  return out;
}

void CpmLattice::recount_volumes() {
  for (auto& c : compartments) c.volume = 0;
  for (const auto o : owner.data()) compartments[o].volume += 1;
}

namespace {

constexpr std::array<std::array<int, 3>, 6> kNeighbors{{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

double pair_energy(const CpmLattice& l, const ContactEnergies& j, std::uint32_t p, std::uint32_t q) {
  if (p == q) return 0.0;
  const auto& cp = l.compartments[p];
  const auto& cq = l.compartments[q];
  return j.between(cp.kind, cq.kind, cp.cell_id == cq.cell_id && cp.cell_id != 0);
}

}  // namespace

CpmLattice seed_cells(const GenConfig& config, Rng& rng) {
  config.validate();
  const Dims d = config.lattice_dims;
  const int r = config.seed_radius;
  if (d.nx < 2 * r + 1 || d.ny < 2 * r + 1 || d.nz < 2 * r + 1) {
    fail(ErrorCode::PlacementOverflow, "lattice too small for seed radius " + std::to_string(r));
  }

  CpmLattice lattice;
  lattice.owner = Grid<std::uint32_t>(d, 0u);
  lattice.compartments.push_back(Compartment{});

  std::vector<std::array<int, 3>> offsets;    // sphere voxels relative to the center
  std::vector<std::size_t> interior;          // indices into offsets usable as het seeds
  for (int dz = -r; dz <= r; ++dz) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const int q = dx * dx + dy * dy + dz * dz;
        if (q > r * r) continue;
        if (q <= (r - 1) * (r - 1)) interior.push_back(offsets.size());
        offsets.push_back({dx, dy, dz});
      }
    }
  }
  if (static_cast<int>(interior.size()) < config.max_heterochromatin) {
    fail(ErrorCode::PlacementOverflow, "seed sphere too small for the heterochromatin compartments");
  }

  std::uniform_int_distribution<int> px(r, d.nx - 1 - r), py(r, d.ny - 1 - r), pz(r, d.nz - 1 - r);
  std::uniform_int_distribution<int> het_count(config.min_heterochromatin, config.max_heterochromatin);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::array<int, 3>> centers;
  const long long min_dist2 = static_cast<long long>(2 * r + 1) * (2 * r + 1);

  for (int cell = 1; cell <= config.cell_count; ++cell) {
    std::array<int, 3> c{};
    bool placed = false;
    for (int attempt = 0; attempt < config.placement_attempts && !placed; ++attempt) {
      c = {px(rng), py(rng), pz(rng)};
      placed = std::all_of(centers.begin(), centers.end(), [&](const auto& o) {
        const long long ddx = c[0] - o[0], ddy = c[1] - o[1], ddz = c[2] - o[2];
        return ddx * ddx + ddy * ddy + ddz * ddz >= min_dist2;
      });
    }
    if (!placed) {
      fail(ErrorCode::PlacementOverflow, "could not place cell " + std::to_string(cell) + " after " +
                                             std::to_string(config.placement_attempts) + " attempts");
    }
    centers.push_back(c);

    const int k = het_count(rng);
    const long long total = config.cell_target_volume;
    const long long het_each = std::max<long long>(
        1, std::llround(config.heterochromatin_fraction * static_cast<double>(total) / k));
    const long long eu_total = total - het_each * k;
    const auto eu_a = static_cast<std::uint32_t>(lattice.compartments.size());
    const auto eu_b = eu_a + 1;
    lattice.compartments.push_back({static_cast<std::uint32_t>(cell), CompartmentKind::Euchromatin, eu_total / 2, 0});
    lattice.compartments.push_back(
        {static_cast<std::uint32_t>(cell), CompartmentKind::Euchromatin, eu_total - eu_total / 2, 0});

    // Euchromatin halves split by a random plane through the center.
    std::array<double, 3> u{gauss(rng), gauss(rng), gauss(rng)};
    for (const auto& o : offsets) {
      const double dot = o[0] * u[0] + o[1] * u[1] + o[2] * u[2];
      lattice.owner.at(c[0] + o[0], c[1] + o[1], c[2] + o[2]) = dot < 0.0 ? eu_a : eu_b;
    }

    std::vector<std::size_t> picks;
    std::sample(interior.begin(), interior.end(), std::back_inserter(picks), k, rng);
    std::array<long long, 2> eu_count{0, 0};
    for (const auto& o : offsets) {
      eu_count[lattice.owner.at(c[0] + o[0], c[1] + o[1], c[2] + o[2]) == eu_a ? 0 : 1] += 1;
    }
    for (const auto pick : picks) {
      const auto het = static_cast<std::uint32_t>(lattice.compartments.size());
      lattice.compartments.push_back({static_cast<std::uint32_t>(cell), CompartmentKind::Heterochromatin, het_each, 0});
      const auto& o = offsets[pick];
      auto claim = [&](int x, int y, int z, bool force) {
        auto& site = lattice.owner.at(x, y, z);
        if (site != eu_a && site != eu_b) return;
        const int half = site == eu_a ? 0 : 1;
        if (!force && eu_count[half] <= 2) return;
        eu_count[half] -= 1;
        site = het;
      };
      const int x = c[0] + o[0], y = c[1] + o[1], z = c[2] + o[2];
      claim(x, y, z, true);
      for (const auto& n : kNeighbors) {
        const int qx = o[0] + n[0], qy = o[1] + n[1], qz = o[2] + n[2];
        if (qx * qx + qy * qy + qz * qz > r * r) continue;
        claim(x + n[0], y + n[1], z + n[2], false);
      }
    }
  }
  lattice.recount_volumes();
  return lattice;
}

double delta_energy(const CpmLattice& lattice, const GenConfig& config, std::size_t site,
                    std::uint32_t new_owner) {
  const std::uint32_t old_owner = lattice.owner[site];
  if (old_owner == new_owner) return 0.0;
  const auto& grid = lattice.owner;
  const Dims d = grid.dims();
  const auto [x, y, z] = grid.coords(site);
  double dh = 0.0;
  for (const auto& n : kNeighbors) {
    const int qx = x + n[0], qy = y + n[1], qz = z + n[2];
    if (!d.contains(qx, qy, qz)) continue;
    const std::uint32_t o = grid.at(qx, qy, qz);
    dh += pair_energy(lattice, config.contact, new_owner, o) -
          pair_energy(lattice, config.contact, old_owner, o);
  }
  const double lambda = config.volume_stiffness;
  if (old_owner != 0) {
    const auto& c = lattice.compartments[old_owner];
    dh += lambda * static_cast<double>(1 - 2 * (c.volume - c.target_volume));
  }
  if (new_owner != 0) {
    const auto& c = lattice.compartments[new_owner];
    dh += lambda * static_cast<double>(1 + 2 * (c.volume - c.target_volume));
  }
  return dh;
}

CpmLattice cpm_relax(CpmLattice lattice, const GenConfig& config, Rng& rng, RelaxStats* stats) {
  RelaxStats local;
  const Dims d = lattice.dims();
  const std::size_t n = lattice.owner.size();
  if (n == 0 || config.mc_sweeps <= 0) {
    if (stats) *stats = local;
    return lattice;
  }
  std::uniform_int_distribution<std::size_t> pick_site(0, n - 1);
  std::uniform_int_distribution<int> pick_dir(0, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double temperature = config.temperature;

  for (int sweep = 0; sweep < config.mc_sweeps; ++sweep) {
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t site = pick_site(rng);
      const auto& dir = kNeighbors[static_cast<std::size_t>(pick_dir(rng))];
      ++local.proposals;
      const auto [x, y, z] = lattice.owner.coords(site);
      const int sx = x + dir[0], sy = y + dir[1], sz = z + dir[2];
      if (!d.contains(sx, sy, sz)) continue;
      const std::uint32_t source = lattice.owner.at(sx, sy, sz);
      const std::uint32_t target = lattice.owner[site];
      if (source == target) continue;

      const double dh = delta_energy(lattice, config, site, source);
      bool accept = dh <= 0.0;
      if (!accept && temperature > 0.0) accept = unit(rng) < std::exp(-dh / temperature);
      if (!accept) continue;

      lattice.owner[site] = source;
      lattice.compartments[source].volume += 1;
      auto& lost = lattice.compartments[target];
      lost.volume -= 1;
      ++local.accepted;
      if (target != 0 && lost.volume == 0) {
        local.extinctions.push_back({sweep, target, lost.cell_id});
      }
    }
  }
  if (stats) *stats = std::move(local);
  return lattice;
}

CpmLattice crop_lattice(const CpmLattice& lattice, const Dims& crop_dims) {
  const Dims d = lattice.dims();
  if (!crop_dims.positive() || crop_dims.nx > d.nx || crop_dims.ny > d.ny || crop_dims.nz > d.nz) {
    fail(ErrorCode::CropTooLarge, "crop dims exceed lattice dims");
  }
  const int ox = (d.nx - crop_dims.nx) / 2;
  const int oy = (d.ny - crop_dims.ny) / 2;
  const int oz = (d.nz - crop_dims.nz) / 2;
  CpmLattice out;
  out.owner = Grid<std::uint32_t>(crop_dims, 0u);
  out.compartments = lattice.compartments;
  for (int z = 0; z < crop_dims.nz; ++z) {
    for (int y = 0; y < crop_dims.ny; ++y) {
      for (int x = 0; x < crop_dims.nx; ++x) {
        out.owner.at(x, y, z) = lattice.owner.at(x + ox, y + oy, z + oz);
      }
    }
  }
  out.recount_volumes();
  return out;
}

long long cell_contact_area(const CpmLattice& lattice) {
  const Dims d = lattice.dims();
  long long area = 0;
  auto cell_of = [&](std::uint32_t o) { return lattice.compartments[o].cell_id; };
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const auto a = cell_of(lattice.owner.at(x, y, z));
        if (a == 0) continue;
        if (x + 1 < d.nx) { const auto b = cell_of(lattice.owner.at(x + 1, y, z)); area += (b != 0 && b != a); }
        if (y + 1 < d.ny) { const auto b = cell_of(lattice.owner.at(x, y + 1, z)); area += (b != 0 && b != a); }
        if (z + 1 < d.nz) { const auto b = cell_of(lattice.owner.at(x, y, z + 1)); area += (b != 0 && b != a); }
      }
    }
  }
  return area;
}

// ---- rendering -------------------------------------------------------------

namespace {

float quantize(float v, Dtype dtype) {
  v = std::clamp(v, 0.0f, 1.0f);
  switch (dtype) {
    case Dtype::U8: return static_cast<float>(std::lround(v * 255.0f)) / 255.0f;
    case Dtype::U16: return static_cast<float>(std::lround(v * 65535.0f)) / 65535.0f;
    case Dtype::F32: return v;
  }
  return v;
}

}  // namespace

RenderedVolume render_volume(const CpmLattice& lattice, const GenConfig& config, Rng& rng) {
  config.validate();
  const int f = config.upscale_factor;
  const Dims ld = lattice.dims();
  const Dims od{ld.nx * f, ld.ny * f, ld.nz * f};

  // (a) nearest-neighbor upscale of the compartment owners
  Grid<std::uint32_t> up(od, 0u);
  for (int z = 0; z < od.nz; ++z) {
    for (int y = 0; y < od.ny; ++y) {
      for (int x = 0; x < od.nx; ++x) up.at(x, y, z) = lattice.owner.at(x / f, y / f, z / f);
    }
  }
  auto cell_of = [&](std::uint32_t o) { return lattice.compartments[o].cell_id; };

  // Per-cell bounds at lattice resolution.
  const auto cells = lattice.cell_ids();
  const std::uint32_t max_cell = cells.empty() ? 0 : cells.back();
  std::vector<std::array<int, 6>> bounds(max_cell + 1, {1 << 30, 1 << 30, 1 << 30, -1, -1, -1});
  for (int z = 0; z < ld.nz; ++z) {
    for (int y = 0; y < ld.ny; ++y) {
      for (int x = 0; x < ld.nx; ++x) {
        const auto c = cell_of(lattice.owner.at(x, y, z));
        if (c == 0) continue;
        auto& b = bounds[c];
        b[0] = std::min(b[0], x); b[1] = std::min(b[1], y); b[2] = std::min(b[2], z);
        b[3] = std::max(b[3], x + 1); b[4] = std::max(b[4], y + 1); b[5] = std::max(b[5], z + 1);
      }
    }
  }

  // (b) smooth each cell's binary mask; the strongest cell owns a voxel and
  // labels it when its smoothed value reaches 0.5 (ascending ids keep ties low).
  const double sigma = config.mask_smoothing_sigma;
  const int pad = sigma > 0.0 ? static_cast<int>(std::ceil(3.0 * sigma)) : 0;
  Grid<float> best(od, 0.0f);
  std::vector<std::uint32_t> best_cell(od.count(), 0u);
  for (const auto cell : cells) {
    const auto& b = bounds[cell];
    const int x0 = std::max(0, b[0] * f - pad), x1 = std::min(od.nx, b[3] * f + pad);
    const int y0 = std::max(0, b[1] * f - pad), y1 = std::min(od.ny, b[4] * f + pad);
    const int z0 = std::max(0, b[2] * f - pad), z1 = std::min(od.nz, b[5] * f + pad);
    Grid<float> mask(Dims{x1 - x0, y1 - y0, z1 - z0}, 0.0f);
    for (int z = z0; z < z1; ++z) {
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (cell_of(up.at(x, y, z)) == cell) mask.at(x - x0, y - y0, z - z0) = 1.0f;
        }
      }
    }
    if (sigma > 0.0) mask = gaussian_blur(mask, sigma, sigma, sigma);
    for (int z = z0; z < z1; ++z) {
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const float m = mask.at(x - x0, y - y0, z - z0);
          const std::size_t i = best.index(x, y, z);
          if (m > best[i]) {
            best[i] = m;
            best_cell[i] = cell;
          }
        }
      }
    }
  }

  // (c) compartment intensity under the cell's soft boundary mask
  LabelVolume labels(od, Dtype::U16);
  Grid<float> image(od, 0.0f);
  for (std::size_t i = 0; i < od.count(); ++i) {
    const auto cell = best_cell[i];
    if (cell == 0) continue;
    if (best[i] >= 0.5f) labels.grid[i] = cell;
    const auto& comp = lattice.compartments[up[i]];
    const CompartmentKind kind = comp.cell_id == cell ? comp.kind : CompartmentKind::Euchromatin;
    const double level = kind == CompartmentKind::Heterochromatin ? config.heterochromatin_level
                                                                  : config.euchromatin_level;
    image[i] = static_cast<float>(level * best[i]);
  }
  labels = relabel_sequential(labels);
  if (labels.max_id() > 0xFFFFu) labels.dtype = Dtype::F32;

  // (d) point-spread blur by profile
  if (config.profile == 2) {
    image = gaussian_blur(image, config.blur_sigma_iso, config.blur_sigma_iso, config.blur_sigma_iso);
  } else if (config.profile == 3) {
    image = gaussian_blur(image, config.blur_sigma_xy, config.blur_sigma_xy, config.blur_sigma_z);
  }

  // (e) additive Gaussian noise, clamped, quantized to the output dtype
  if (config.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (std::size_t i = 0; i < image.size(); ++i) {
      image[i] = static_cast<float>(static_cast<double>(image[i]) + noise(rng));
    }
  }
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = quantize(image[i], config.output_dtype);

  return {IntensityVolume(std::move(image), config.output_dtype), std::move(labels)};
}

CpmLattice simulate_lattice(const GenConfig& config, RelaxStats* stats) {
  config.validate();
  Rng rng(config.seed);
  CpmLattice lattice = seed_cells(config, rng);
  lattice = cpm_relax(std::move(lattice), config, rng, stats);
  return crop_lattice(lattice, config.crop_dims);
}

RenderedVolume render_for_config(const CpmLattice& lattice, const GenConfig& config) {
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  return render_volume(lattice, config, rng);
}

RenderedVolume generate_volume(const GenConfig& config, RelaxStats* stats) {
  return render_for_config(simulate_lattice(config, stats), config);
}

// ---- dataset ---------------------------------------------------------------

json gen_dataset(const GenConfig& config, int count, const std::filesystem::path& out_dir,
                 int workers) {
  config.validate();
  if (count < 0) fail(ErrorCode::UsageError, "count must be >= 0");
  std::vector<DatasetEntry> entries(static_cast<std::size_t>(count));
  std::vector<std::size_t> extinctions(static_cast<std::size_t>(count), 0);

  auto produce = [&](int index) {
    GenConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(index);
    RelaxStats stats;
    const RenderedVolume v = generate_volume(c, &stats);
    char base[32];
    std::snprintf(base, sizeof base, "vol_%04d", index);
    DatasetEntry e;
    e.index = index;
    e.seed = c.seed;
    e.image = base;
    e.labels = std::string(base) + "_labels";
    e.boxes3d = std::string(base) + "_boxes3d.json";
    e.boxes2d = std::string(base) + "_boxes2d.jsonl";
    e.instances = static_cast<int>(v.labels.instance_ids().size());
    write_volume(v.image, out_dir / e.image);
    write_volume(v.labels, out_dir / e.labels);
    save_boxes(oracle_boxes_3d(v.labels), out_dir / e.boxes3d);
    save_detections(oracle_boxes_2d(v.labels), out_dir / e.boxes2d);
    entries[static_cast<std::size_t>(index)] = e;
    extinctions[static_cast<std::size_t>(index)] = stats.extinctions.size();
  };

  const int threads = std::clamp(workers, 1, std::max(count, 1));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  auto run = [&](int t) {
    try {
      for (int i = next++; i < count; i = next++) produce(i);
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  };
  if (threads == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(run, t);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  json manifest;
  manifest["config"] = to_json(config);
  manifest["count"] = count;
  manifest["output_dims"] = {config.output_dims().nx, config.output_dims().ny, config.output_dims().nz};
  json vols = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    vols.push_back(json{{"index", e.index},
                        {"seed", e.seed},
                        {"image", e.image},
                        {"labels", e.labels},
                        {"boxes3d", e.boxes3d},
                        {"boxes2d", e.boxes2d},
                        {"instances", e.instances},
                        {"compartment_extinctions", extinctions[i]}});
  }
  manifest["volumes"] = vols;
  write_json_atomic(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace cellseg

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"
#include "cellseg/geometry.hpp"
#include "cellseg/imgproc.hpp"
#include "cellseg/synth.hpp"
#include "cellseg/volume_io.hpp"
#include "test_support.hpp"

using namespace cellseg;
namespace fs = std::filesystem;

namespace {

GenConfig small_config() {
  GenConfig c;
  c.cell_count = 4;
  c.lattice_dims = Dims::cube(24);
  c.crop_dims = Dims::cube(20);
  c.seed_radius = 3;
  c.cell_target_volume = 300;
  c.mc_sweeps = 20;
  c.seed = 5;
  return c;
}

// Hand-built lattice: medium plus two cells, each with two euchromatin halves
// and one heterochromatin block, laid out as adjacent boxes.
CpmLattice two_cell_lattice(Dims dims, int x0, int side) {
  CpmLattice l;
  l.owner = Grid<std::uint32_t>(dims, 0u);
  l.compartments.push_back(Compartment{});
  const long long target = static_cast<long long>(side) * side * side;
  for (std::uint32_t cell = 1; cell <= 2; ++cell) {
    const auto base = static_cast<std::uint32_t>(l.compartments.size());
    l.compartments.push_back({cell, CompartmentKind::Euchromatin, target * 85 / 200, 0});
    l.compartments.push_back({cell, CompartmentKind::Euchromatin, target * 85 / 200, 0});
    l.compartments.push_back({cell, CompartmentKind::Heterochromatin, target * 15 / 100, 0});
    const int xs = x0 + static_cast<int>(cell - 1) * side;
    const int c0 = dims.ny / 2 - side / 2;
    for (int z = c0; z < c0 + side; ++z) {
      for (int y = c0; y < c0 + side; ++y) {
        for (int x = xs; x < xs + side; ++x) {
          const bool het = z < c0 + 2 && y < c0 + 2;
          l.owner.at(x, y, z) = het ? base + 2 : (y < c0 + side / 2 ? base : base + 1);
        }
      }
    }
  }
  l.recount_volumes();
  return l;
}

double mean_contact(CpmLattice l, const GenConfig& c, int chunks, Rng& rng) {
  double sum = 0;
  for (int i = 0; i < chunks; ++i) {
    l = cpm_relax(std::move(l), c, rng);
    sum += static_cast<double>(cell_contact_area(l));
  }
  return sum / chunks;
}

}  // namespace

TEST(SeedCells, SingleCellHasTwoEuchromatinAndFiveToNineHeterochromatin) {
  GenConfig c = small_config();
  c.cell_count = 1;
  Rng rng(1);
  const auto l = seed_cells(c, rng);
  EXPECT_EQ(l.cell_ids(), std::vector<std::uint32_t>{1});
  int eu = 0, het = 0;
  for (std::uint32_t idx : l.compartments_of(1)) {
    eu += l.compartments[idx].kind == CompartmentKind::Euchromatin;
    het += l.compartments[idx].kind == CompartmentKind::Heterochromatin;
    EXPECT_GT(l.compartments[idx].volume, 0);
  }
  EXPECT_EQ(eu, 2);
  EXPECT_GE(het, 5);
  EXPECT_LE(het, 9);
}

TEST(SeedCells, DefaultPopulationFitsTheDefaultLattice) {
  GenConfig c;  // 128 cells in 84^3
  Rng rng(0);
  const auto l = seed_cells(c, rng);
  EXPECT_EQ(l.cell_ids().size(), 128u);
}

TEST(SeedCells, TargetsGiveAboutFifteenPercentHeterochromatin) {
  GenConfig c;
  Rng rng(3);
  const auto l = seed_cells(c, rng);
  for (std::uint32_t cell : l.cell_ids()) {
    long long het = 0, total = 0;
    for (std::uint32_t idx : l.compartments_of(cell)) {
      total += l.compartments[idx].target_volume;
      if (l.compartments[idx].kind == CompartmentKind::Heterochromatin) {
        het += l.compartments[idx].target_volume;
      }
    }
    const double f = static_cast<double>(het) / static_cast<double>(total);
    EXPECT_GE(f, 0.13) << "cell " << cell;
    EXPECT_LE(f, 0.17) << "cell " << cell;
  }
}

TEST(SeedCells, SameSeedSameLattice) {
  const GenConfig c = small_config();
  Rng a(9), b(9);
  EXPECT_EQ(seed_cells(c, a), seed_cells(c, b));
}

TEST(SeedCells, OvercrowdedLatticeOverflows) {
  GenConfig c = small_config();
  c.cell_count = 200;
  c.placement_attempts = 50;
  Rng rng(1);
  try {
    seed_cells(c, rng);
    FAIL() << "expected PlacementOverflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PlacementOverflow);
  }
}

TEST(CpmRelax, ZeroSweepsIsIdentity) {
  GenConfig c = small_config();
  c.mc_sweeps = 0;
  Rng rng(2);
  const auto l = seed_cells(c, rng);
  EXPECT_EQ(cpm_relax(l, c, rng), l);
}

TEST(CpmRelax, IncrementalDeltaMatchesFullHamiltonian) {
  GenConfig c;
  c.volume_stiffness = 1.5;
  CpmLattice l = two_cell_lattice(Dims::cube(8), 1, 3);
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> site(0, l.owner.size() - 1);
  std::uniform_int_distribution<std::uint32_t> owner(0, static_cast<std::uint32_t>(l.compartments.size() - 1));
  for (int i = 0; i < 1000; ++i) {
    const std::size_t s = site(rng);
    const std::uint32_t o = owner(rng);
    const double before = support::brute_hamiltonian(l, c);
    CpmLattice after = l;
    after.owner[s] = o;
    after.recount_volumes();
    const double expected = support::brute_hamiltonian(after, c) - before;
    ASSERT_NEAR(delta_energy(l, c, s, o), expected, 1e-9) << "proposal " << i;
    // Walk the state so later proposals see varied configurations.
    if (i % 3 == 0) l = std::move(after);
  }
}

TEST(CpmRelax, DeterministicForASeed) {
  const GenConfig c = small_config();
  Rng s1(4), s2(4);
  const auto l1 = seed_cells(c, s1);
  const auto l2 = seed_cells(c, s2);
  EXPECT_EQ(cpm_relax(l1, c, s1), cpm_relax(l2, c, s2));
}

TEST(CpmRelax, VolumesStayConsistentWithTheGrid) {
  const GenConfig c = small_config();
  Rng rng(6);
  auto l = cpm_relax(seed_cells(c, rng), c, rng);
  const auto stored = l.compartments;
  l.recount_volumes();
  EXPECT_EQ(stored, l.compartments);
}

TEST(CpmRelax, LowerCellCellEnergyIncreasesContact) {
  GenConfig attract;
  attract.mc_sweeps = 50;
  attract.contact.cell_cell = 2.0;  // well below the cell-medium energies
  GenConfig repel = attract;
  repel.contact.cell_cell = 40.0;
  const CpmLattice start = two_cell_lattice(Dims::cube(24), 5, 7);
  Rng r1(8), r2(8);
  const double low = mean_contact(start, attract, 10, r1);
  const double high = mean_contact(start, repel, 10, r2);
  EXPECT_GT(low, high);
  EXPECT_GT(low, 0.0);
}

TEST(CropLattice, FullDimsIsIdentity) {
  const GenConfig c = small_config();
  Rng rng(1);
  const auto l = seed_cells(c, rng);
  EXPECT_EQ(crop_lattice(l, l.dims()), l);
}

TEST(CropLattice, CenteredWindowStartsAtTen) {
  CpmLattice l;
  l.owner = Grid<std::uint32_t>(Dims::cube(84), 0u);
  l.compartments = {Compartment{}, {1, CompartmentKind::Euchromatin, 1, 0}};
  l.owner.at(10, 10, 10) = 1;
  l.owner.at(73, 73, 73) = 1;
  l.owner.at(9, 10, 10) = 1;
  l.owner.at(74, 73, 73) = 1;
  l.recount_volumes();
  const auto c = crop_lattice(l, Dims::cube(64));
  EXPECT_EQ(c.owner.at(0, 0, 0), 1u);
  EXPECT_EQ(c.owner.at(63, 63, 63), 1u);
  EXPECT_EQ(c.compartments[1].volume, 2);
}

TEST(CropLattice, CornerCellVanishesFromInventory) {
  CpmLattice l;
  l.owner = Grid<std::uint32_t>(Dims::cube(84), 0u);
  l.compartments = {Compartment{}, {1, CompartmentKind::Euchromatin, 125, 0},
                    {2, CompartmentKind::Euchromatin, 1, 0}};
  for (int z = 0; z < 5; ++z) {
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 5; ++x) l.owner.at(x, y, z) = 1;
    }
  }
  l.owner.at(40, 40, 40) = 2;
  l.recount_volumes();
  EXPECT_EQ(l.cell_ids(), (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(crop_lattice(l, Dims::cube(64)).cell_ids(), std::vector<std::uint32_t>{2});
}

TEST(CropLattice, OversizedCropIsRejected) {
  CpmLattice l;
  l.owner = Grid<std::uint32_t>(Dims::cube(8), 0u);
  l.compartments = {Compartment{}};
  try {
    crop_lattice(l, Dims{9, 8, 8});
    FAIL() << "expected CropTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CropTooLarge);
  }
}

TEST(Render, OutputDimsAreCropTimesUpscale) {
  GenConfig c = small_config();
  c.profile = 1;
  const auto v = generate_volume(c);
  EXPECT_EQ(v.image.dims(), Dims::cube(40));
  EXPECT_EQ(v.labels.dims(), Dims::cube(40));
  EXPECT_NO_THROW(v.image.validate());
}

TEST(Render, NoBlurNoNoiseProfilesAgree) {
  GenConfig c = small_config();
  c.noise_sigma = 0.0;
  c.blur_sigma_iso = 0.0;
  c.blur_sigma_xy = 0.0;
  c.blur_sigma_z = 0.0;
  const auto lattice = simulate_lattice(c);
  c.profile = 1;
  const auto p1 = render_for_config(lattice, c);
  c.profile = 2;
  const auto p2 = render_for_config(lattice, c);
  c.profile = 3;
  const auto p3 = render_for_config(lattice, c);
  EXPECT_EQ(p1.image, p2.image);
  EXPECT_EQ(p1.image, p3.image);
  EXPECT_EQ(p1.labels, p2.labels);
}

TEST(Render, NoiseFreeRenderingUsesCompartmentLevels) {
  GenConfig c = small_config();
  c.noise_sigma = 0.0;
  c.profile = 1;
  const auto v = render_for_config(simulate_lattice(c), c);
  // Background stays dark and no voxel exceeds the brightest level.
  float peak = 0.0f;
  for (std::size_t i = 0; i < v.image.grid.size(); ++i) {
    peak = std::max(peak, v.image.grid[i]);
    // Unlabelled voxels have a smoothed mask below 0.5.
    if (v.labels.grid[i] == 0) EXPECT_LE(v.image.grid[i], 0.5f * static_cast<float>(c.heterochromatin_level) + 0.5f / 255.0f);
  }
  EXPECT_LE(peak, static_cast<float>(c.heterochromatin_level) + 1e-6f);
  EXPECT_GE(peak, static_cast<float>(c.euchromatin_level) - 1e-6f);
}

TEST(Render, BlurProfilesEqualBlurredProfileOne) {
  GenConfig c = small_config();
  c.noise_sigma = 0.0;
  const auto lattice = simulate_lattice(c);
  c.profile = 1;
  const auto sharp = render_for_config(lattice, c);
  c.profile = 2;
  const auto iso = render_for_config(lattice, c);
  c.profile = 3;
  const auto aniso = render_for_config(lattice, c);
  const auto want_iso = gaussian_blur(sharp.image.grid, c.blur_sigma_iso, c.blur_sigma_iso, c.blur_sigma_iso);
  const auto want_aniso = gaussian_blur(sharp.image.grid, c.blur_sigma_xy, c.blur_sigma_xy, c.blur_sigma_z);
  // Both sides are stored at 8 bits: one quantization step covers the
  // rounding before and after the blur.
  for (std::size_t i = 0; i < want_iso.size(); ++i) {
    ASSERT_NEAR(iso.image.grid[i], want_iso[i], 1.0 / 255.0 + 1e-6);
    ASSERT_NEAR(aniso.image.grid[i], want_aniso[i], 1.0 / 255.0 + 1e-6);
  }
}

TEST(Render, LabelsAreBlurAndNoiseFree) {
  GenConfig c = small_config();
  const auto lattice = simulate_lattice(c);
  c.profile = 1;
  const auto a = render_for_config(lattice, c);
  c.profile = 3;
  c.noise_sigma = 0.2;
  const auto b = render_for_config(lattice, c);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.image, b.image);
}

TEST(Render, LabelsAreSequentialAndBoundedByTheCellCount) {
  const GenConfig c = small_config();
  const auto lattice = simulate_lattice(c);
  const auto v = render_for_config(lattice, c);
  const auto ids = v.labels.instance_ids();
  ASSERT_FALSE(ids.empty());
  EXPECT_LE(ids.size(), lattice.cell_ids().size());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], i + 1);
}

TEST(GenerateVolume, IsAPureFunctionOfTheConfig) {
  const GenConfig c = small_config();
  const auto a = generate_volume(c);
  const auto b = generate_volume(c);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.labels, b.labels);
  GenConfig other = c;
  other.seed += 1;
  EXPECT_NE(generate_volume(other).labels, a.labels);
}

TEST(GenDataset, SingleVolumeManifestAndArtifacts) {
  support::TempDir dir;
  const auto m = gen_dataset(small_config(), 1, dir.path());
  ASSERT_EQ(m.at("volumes").size(), 1u);
  const auto& e = m.at("volumes")[0];
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  for (const char* key : {"image", "labels"}) {
    const std::string base = e.at(key);
    EXPECT_TRUE(fs::exists(dir / (base + ".json")));
    EXPECT_TRUE(fs::exists(dir / (base + ".raw")));
  }
  EXPECT_TRUE(fs::exists(dir / e.at("boxes3d").get<std::string>()));
  EXPECT_TRUE(fs::exists(dir / e.at("boxes2d").get<std::string>()));
  EXPECT_EQ(m.at("config").at("seed"), 5);
}

TEST(GenDataset, RegenerationIsByteIdentical) {
  support::TempDir a, b;
  gen_dataset(small_config(), 2, a.path());
  gen_dataset(small_config(), 2, b.path(), 2);
  for (const auto& entry : fs::directory_iterator(a.path())) {
    const auto name = entry.path().filename();
    EXPECT_TRUE(support::same_bytes(entry.path(), b / name.string())) << name;
  }
}

TEST(GenDataset, PerVolumeSeedsAreSeedPlusIndex) {
  support::TempDir dir;
  const auto m = gen_dataset(small_config(), 2, dir.path());
  EXPECT_EQ(m.at("volumes")[0].at("seed"), 5);
  EXPECT_EQ(m.at("volumes")[1].at("seed"), 6);
  GenConfig c = small_config();
  c.seed = 6;
  EXPECT_EQ(read_labels(dir / m.at("volumes")[1].at("labels").get<std::string>()), generate_volume(c).labels);
}

TEST(GenConfig, ValidationRejectsBadValues) {
  GenConfig c;
  c.cell_count = 0;
  EXPECT_THROW(c.validate(), Error);
  c = GenConfig{};
  c.crop_dims = Dims::cube(90);
  EXPECT_THROW(c.validate(), Error);
  c = GenConfig{};
  c.blur_sigma_z = -1;
  EXPECT_THROW(c.validate(), Error);
  c = GenConfig{};
  c.upscale_factor = 0;
  EXPECT_THROW(c.validate(), Error);
}

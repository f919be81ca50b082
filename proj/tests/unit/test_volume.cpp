#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cellseg/error.hpp"
#include "cellseg/volume.hpp"

using namespace cellseg;

TEST(Grid, LinearIndexIsXFastest) {
  Grid<float> g(Dims{3, 4, 5});
  for (int z = 0; z < 5; ++z) {
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 3; ++x) {
        EXPECT_EQ(g.index(x, y, z), static_cast<std::size_t>(x + 3 * (y + 4 * z)));
      }
    }
  }
}

TEST(Grid, CoordsInvertIndex) {
  Grid<std::uint8_t> g(Dims{7, 2, 3});
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto [x, y, z] = g.coords(i);
    EXPECT_EQ(g.index(x, y, z), i);
  }
}

TEST(Grid, DataLengthEqualsVoxelCount) {
  const Dims d{5, 6, 7};
  EXPECT_EQ(Grid<float>(d).size(), 5u * 6u * 7u);
  EXPECT_EQ(d.count(), 210u);
}

TEST(Grid, SizeMismatchIsRejected) {
  try {
    Grid<float> g(Dims{2, 2, 2}, std::vector<float>(7, 0.0f));
    FAIL() << "expected DimsMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimsMismatch);
  }
}

TEST(Dims, ContainsAndExtent) {
  const Dims d{4, 5, 6};
  EXPECT_TRUE(d.contains(0, 0, 0));
  EXPECT_TRUE(d.contains(3, 4, 5));
  EXPECT_FALSE(d.contains(4, 0, 0));
  EXPECT_FALSE(d.contains(0, -1, 0));
  EXPECT_EQ(d.extent(Axis::X), 4);
  EXPECT_EQ(d.extent(Axis::Y), 5);
  EXPECT_EQ(d.extent(Axis::Z), 6);
}

TEST(Dtype, NamesRoundTrip) {
  for (Dtype d : {Dtype::U8, Dtype::U16, Dtype::F32}) EXPECT_EQ(parse_dtype(to_string(d)), d);
  EXPECT_EQ(dtype_size(Dtype::U8), 1u);
  EXPECT_EQ(dtype_size(Dtype::U16), 2u);
  EXPECT_EQ(dtype_size(Dtype::F32), 4u);
  try {
    parse_dtype("f64");
    FAIL() << "expected UnknownDtype";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownDtype);
  }
}

TEST(IntensityVolume, ValidateRejectsOutOfRangeAndNaN) {
  IntensityVolume v(Dims{2, 2, 2});
  EXPECT_NO_THROW(v.validate());
  v.grid[3] = 1.5f;
  EXPECT_THROW(v.validate(), Error);
  v.grid[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(v.validate(), Error);
  v.grid[3] = -0.1f;
  EXPECT_THROW(v.validate(), Error);
}

TEST(LabelVolume, InstanceInventoryMatchesPresentIds) {
  LabelVolume v(Dims{4, 4, 4});
  v.grid.at(0, 0, 0) = 7;
  v.grid.at(1, 2, 3) = 2;
  v.grid.at(3, 3, 3) = 7;
  EXPECT_EQ(v.instance_ids(), (std::vector<std::uint32_t>{2, 7}));
  EXPECT_EQ(v.max_id(), 7u);
}

TEST(LabelVolume, RelabelSequentialKeepsOrderAndPartition) {
  LabelVolume v(Dims{3, 1, 1});
  v.grid[0] = 40;
  v.grid[1] = 5;
  v.grid[2] = 40;
  const auto r = relabel_sequential(v);
  EXPECT_EQ(r.grid[0], 2u);
  EXPECT_EQ(r.grid[1], 1u);
  EXPECT_EQ(r.grid[2], 2u);
}

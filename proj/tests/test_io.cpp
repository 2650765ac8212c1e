#include <doctest.h>

#include <charconv>
#include <cmath>
#include <cstring>

#include "stochphase/io.hpp"

using namespace stochphase;

TEST_CASE("numbers round trip through their text form") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 3.5}) {
    const std::string s = format_number(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("csv tables") {
  CsvTable t;
  t.header = {"a", "b"};
  t.add_row({"1", "2"});
  CHECK(t.str() == "a,b\n1,2\n");
  CHECK_THROWS_AS(t.add_row({"1"}), Error);
}

TEST_CASE("reduced model table") {
  ReducedPhaseModel m;
  m.n_bins = 2;
  m.phi = {1.0, 2.0};
  m.a = {3.5, 3.5};
  m.D = {0.1, 0.2};
  m.count = {10, 12};
  CHECK(reduced_table(m).str() == "phi,a,D,count\n1,3.5,0.1,10\n2,3.5,0.2,12\n");
  const json meta = reduced_metadata(m);
  CHECK(meta["zero_crossings"] == 0);
  CHECK(meta["label"] == "asymptotic");
}

TEST_CASE("files") {
  const auto dir = std::filesystem::temp_directory_path() / "stochphase_io_test";
  write_file(dir / "sub" / "x.txt", "hello\n");
  CHECK(read_file(dir / "sub" / "x.txt") == "hello\n");
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_file(dir / "missing"), Error);
}

TEST_CASE("raw field block and sidecar") {
  const GridPtr g = Grid2D::create(Box{{-1, -2}, {1, 2}}, 16, 20);
  std::vector<double> v(g->size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 * static_cast<double>(k) - 1.0;
  const std::string block = raw_block(v);
  REQUIRE(block.size() == 320 * sizeof(double));
  std::vector<double> back(320);
  std::memcpy(back.data(), block.data(), block.size());
  CHECK(back == v);
  const json side = raw_sidecar(*g, "P0");
  CHECK(side["nx"] == 16);
  CHECK(side["ny"] == 20);
  CHECK(side["bounds"][3] == 2.0);
  CHECK(side["mask_digest"] == g->mask_digest());
}

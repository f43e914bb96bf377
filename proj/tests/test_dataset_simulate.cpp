#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "conicbayes/dataset.hpp"
#include "conicbayes/simulate.hpp"

using namespace conic;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conicbayes_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool same_points(const NoisyDataset& a, const NoisyDataset& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    if (a.points[i].x != b.points[i].x || a.points[i].y != b.points[i].y) return false;
  return true;
}

}  // namespace

TEST(Sim1, TrueEllipseAndShape) {
  SimSpec spec;
  spec.protocol = Protocol::Sim1;
  spec.n_datasets = 3;
  spec.n_points = 200;
  const auto data = simulate_sim1(spec);
  ASSERT_EQ(data.size(), 3u);
  for (const NoisyDataset& d : data) {
    ASSERT_TRUE(d.truth);
    EXPECT_EQ(d.points.size(), 200u);
    EXPECT_EQ(d.truth->angles.size(), 200u);
    const StandardForm s = to_standard_form(d.truth->conic);
    EXPECT_NEAR(s.a, 50.0, 1e-9);
    EXPECT_NEAR(*s.b, 25.0, 1e-9);
    EXPECT_NEAR(s.center.x, 250.0, 1e-9);
    EXPECT_NEAR(s.center.y, 250.0, 1e-9);
    for (double t : d.truth->angles) EXPECT_TRUE(in_support(t, d.truth->conic.e));
  }
}

TEST(Sim1, CentroidNearDataWeightedCentroid) {
  // Reference: E[(250 - 50 cos u, 250 - 25 sin u)] with u = 2 pi T - pi,
  // T ~ Beta(3, 3), by quadrature (phi = pi puts the focus-side vertex at x = 200).
  double wx = 0.0, wy = 0.0, wsum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = (i + 0.5) / n;
    const double dens = v * v * (1 - v) * (1 - v);
    const double u = kTwoPi * v - kPi;
    wx += dens * (250.0 - 50.0 * std::cos(u));
    wy += dens * (250.0 - 25.0 * std::sin(u));
    wsum += dens;
  }
  wx /= wsum;
  wy /= wsum;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NoisyDataset d = simulate_sim1_dataset(200, 2.0, kPi, seed);
    double cx = 0.0, cy = 0.0;
    for (const Point& p : d.points) {
      cx += p.x / 200.0;
      cy += p.y / 200.0;
    }
    EXPECT_LT(std::hypot(cx - wx, cy - wy), 3.0) << "seed " << seed;
  }
}

TEST(Sim1, CentreAnglesCoverTheWholeEllipse) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NoisyDataset d = simulate_sim1_dataset(200, 0.0, kPi, seed);
    double lo = 1e300, hi = -1e300;
    for (const Point& p : d.points) {
      lo = std::min(lo, p.x);
      hi = std::max(hi, p.x);
    }
    EXPECT_LT(lo, 203.0);
    EXPECT_GT(hi, 290.0);
    // The focal reading crowds the focus side and stops short of x = 300.
    const NoisyDataset f = simulate_sim1_dataset(200, 0.0, kPi, seed, EllipseAngles::Focal);
    double fhi = -1e300;
    for (const Point& p : f.points) fhi = std::max(fhi, p.x);
    EXPECT_LT(fhi, 290.0);
  }
}

TEST(Sim, NoiselessPointsLieOnConic) {
  for (ConicType type : {ConicType::NonCircularEllipse, ConicType::Parabola, ConicType::Hyperbola}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const NoisyDataset d = simulate_sim2_dataset(type, 100, 0.0, seed);
      const ConicQuad q = fd_to_quad(d.truth->conic);
      EXPECT_EQ(type_of(d.truth->conic.e), type);
      for (const Point& p : d.points) EXPECT_LT(std::abs(evaluate_relative(q, p)), 1e-9);
    }
  }
  const NoisyDataset s1 = simulate_sim1_dataset(200, 0.0, kPi, 3);
  const ConicQuad q = fd_to_quad(s1.truth->conic);
  for (const Point& p : s1.points) EXPECT_LT(std::abs(evaluate_relative(q, p)), 1e-9);
}

TEST(Sim2, HyperbolaEccentricityFromAxes) {
  // e = sqrt(1 + b^2/a^2); a = 50, b = 25 gives 1.1180.
  const ConicFD c = from_standard_form({ConicType::Hyperbola, 50.0, 25.0, kSimCenter, 0.3});
  EXPECT_NEAR(c.e, 1.1180, 1e-4);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const NoisyDataset d = simulate_sim2_dataset(ConicType::Hyperbola, 50, 2.0, seed);
    const StandardForm s = to_standard_form(d.truth->conic);
    EXPECT_NEAR(d.truth->conic.e, std::sqrt(1.0 + (*s.b * *s.b) / (s.a * s.a)), 1e-12);
    EXPECT_NEAR(s.center.x, 250.0, 1e-9);
    for (double t : d.truth->angles) EXPECT_TRUE(in_support(t, d.truth->conic.e));
  }
}

TEST(Sim2, BalancedTypes) {
  SimSpec spec;
  spec.protocol = Protocol::Sim2;
  spec.n_datasets = 300;
  spec.n_points = 10;
  const auto data = simulate_sim2(spec);
  int counts[4] = {0, 0, 0, 0};
  for (const NoisyDataset& d : data) ++counts[static_cast<int>(type_of(d.truth->conic.e))];
  EXPECT_EQ(counts[0], 0);
  EXPECT_EQ(counts[1], 100);
  EXPECT_EQ(counts[2], 100);
  EXPECT_EQ(counts[3], 100);
}

TEST(Sim2, AngleRanges) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NoisyDataset p = simulate_sim2_dataset(ConicType::Parabola, 200, 2.0, seed);
    for (double t : p.truth->angles) {
      EXPECT_GE(t, -2.0);
      EXPECT_LE(t, 2.0);
    }
    const NoisyDataset f = simulate_sim2_dataset(ConicType::NonCircularEllipse, 200, 2.0, seed,
                                                 EllipseAngles::Focal);
    for (double t : f.truth->angles) EXPECT_LE(std::abs(t), kPi / 2);
    // Half curve: every point is on the focus side of the minor axis.
    const NoisyDataset h = simulate_sim2_dataset(ConicType::NonCircularEllipse, 200, 0.0, seed);
    const StandardForm s = to_standard_form(h.truth->conic);
    for (const Point& q : h.points) EXPECT_GE(to_standard_point(q, s.center, s.phi).x, -1e-9);
  }
}

TEST(Sim, SameSeedIsBitIdentical) {
  SimSpec spec;
  spec.protocol = Protocol::Sim2;
  spec.n_datasets = 6;
  spec.seed = 99;
  const auto a = simulate_sim2(spec), b = simulate_sim2(spec);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(same_points(a[i], b[i]));
  spec.seed = 100;
  EXPECT_FALSE(same_points(a[0], simulate_sim2(spec)[0]));
}

TEST(Sim, InvalidSpecs) {
  SimSpec spec;
  spec.n_datasets = 0;
  EXPECT_THROW(validate(spec), InvalidSpecError);
  spec.n_datasets = 1;
  spec.n_points = 4;
  EXPECT_THROW(validate(spec), InvalidSpecError);
  spec.n_points = 10;
  spec.sigma = 0.0;
  EXPECT_THROW(validate(spec), InvalidSpecError);
  spec.sigma = 2.0;
  spec.protocol = Protocol::Sim2;
  EXPECT_THROW(simulate_sim1(spec), InvalidSpecError);
}

TEST(DatasetIo, JsonRoundTripIsLossless) {
  const fs::path dir = temp_dir("io_json");
  const NoisyDataset d = simulate_sim2_dataset(ConicType::Hyperbola, 40, 2.0, 17);
  write_dataset(dir / "d.json", d);
  const NoisyDataset r = read_dataset(dir / "d.json");
  EXPECT_TRUE(same_points(d, r));
  ASSERT_TRUE(r.truth);
  EXPECT_EQ(r.seed, d.seed);
  EXPECT_EQ(r.truth->sigma, d.truth->sigma);
  EXPECT_EQ(r.truth->conic.e, d.truth->conic.e);
  EXPECT_EQ(r.truth->conic.phi, d.truth->conic.phi);
  EXPECT_EQ(r.truth->angles, d.truth->angles);
}

TEST(DatasetIo, CsvRoundTripAndHeader) {
  const fs::path dir = temp_dir("io_csv");
  const NoisyDataset d = simulate_sim1_dataset(20, 2.0, kPi, 3);
  write_dataset(dir / "d.csv", d);
  const NoisyDataset r = read_dataset(dir / "d.csv");
  EXPECT_TRUE(same_points(d, r));
  EXPECT_FALSE(r.truth);
  std::ifstream in(dir / "d.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,y");
}

TEST(DatasetIo, Errors) {
  const fs::path dir = temp_dir("io_err");
  EXPECT_THROW(read_dataset(dir / "missing.json"), IoError);
  {
    std::ofstream(dir / "bad.json") << "{\"points\": [[1, 2], [3]]}";
  }
  EXPECT_THROW(read_dataset(dir / "bad.json"), MalformedFileError);
  {
    std::ofstream(dir / "trunc.json") << "{\"points\": [[1, 2]";
  }
  EXPECT_THROW(read_dataset(dir / "trunc.json"), MalformedFileError);
  {
    std::ofstream(dir / "bad.csv") << "x,y\n1,2\n3,abc\n";
  }
  EXPECT_THROW(read_dataset(dir / "bad.csv"), MalformedFileError);
  {
    std::ofstream(dir / "len.json")
        << R"({"points": [[1,2],[3,4]], "truth": {"h":0,"k":0,"phi":0,"l":1,"e":0.5,"sigma":1,"angles":[0.1]}, "seed": 1})";
  }
  EXPECT_THROW(read_dataset(dir / "len.json"), MalformedFileError);
}

TEST(DatasetIo, AtomicWriteLeavesNoTemporaries) {
  const fs::path dir = temp_dir("io_atomic");
  write_file_atomic(dir / "a.txt", "one");
  write_file_atomic(dir / "a.txt", "two");
  EXPECT_EQ(read_file(dir / "a.txt"), "two");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
  // A regular file where the parent directory should be.
  EXPECT_THROW(write_file_atomic(dir / "a.txt" / "b.txt", "x"), IoError);
}

#include <cmath>
#include <random>

#include "doctest.h"
#include "trajcraft/errors.hpp"
#include "trajcraft/geometry.hpp"
#include "unit/oracles.hpp"

using namespace trajcraft;

namespace {

CameraIntrinsics vga() {
  CameraIntrinsics k;
  k.fx = k.fy = 500.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

PoseSE3 random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  const Eigen::Vector3d axis(n(rng), n(rng), n(rng));
  return PoseSE3::from_axis_angle(axis.normalized(), angle(rng),
                                  Eigen::Vector3d(n(rng), n(rng), n(rng)));
}

bool near(const PoseSE3& a, const PoseSE3& b, double tol) {
  return (a.rotation - b.rotation).cwiseAbs().maxCoeff() < tol &&
         (a.translation - b.translation).cwiseAbs().maxCoeff() < tol;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("unproject on the principal point follows the optical axis") {
    const Eigen::Vector3d p = unproject_pixel(320.0, 240.0, 5.0, vga());
    CHECK(p == Eigen::Vector3d(0.0, 0.0, 5.0));
  }

  TEST_CASE("unproject and project agree with hand-evaluated pinhole values") {
    const Eigen::Vector3d p = unproject_pixel(420.0, 240.0, 2.0, vga());
    CHECK(p.x() == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(p.y() == 0.0);
    CHECK(p.z() == 2.0);

    const Projection q = project_point({0.4, 0.0, 2.0}, vga());
    CHECK(q.u == doctest::Approx(420.0).epsilon(1e-15));
    CHECK(q.v == doctest::Approx(240.0).epsilon(1e-15));
    CHECK(q.depth == 2.0);

    const Projection unit = project_point({0.0, 0.0, 1.0}, CameraIntrinsics{});
    CHECK(unit.u == 0.0);
    CHECK(unit.v == 0.0);
    CHECK(unit.depth == 1.0);
  }

  TEST_CASE("points at or behind the near plane are rejected") {
    CHECK_THROWS_AS(project_point({0.0, 0.0, -1.0}, vga()), BehindCameraError);
    CHECK_THROWS_AS(project_point({0.0, 0.0, kDefaultZNear}, vga()), BehindCameraError);
    CHECK_THROWS_AS(project_point({0.0, 0.0, 0.5}, vga(), 0.5), BehindCameraError);
    CHECK_NOTHROW(project_point({0.0, 0.0, 0.51}, vga(), 0.5));
  }

  TEST_CASE("non-positive or non-finite depth is an invalid-depth error") {
    CHECK_THROWS_AS(unproject_pixel(1.0, 1.0, 0.0, vga()), InvalidDepthError);
    CHECK_THROWS_AS(unproject_pixel(1.0, 1.0, -2.0, vga()), InvalidDepthError);
    CHECK_THROWS_AS(unproject_pixel(1.0, 1.0, INFINITY, vga()), InvalidDepthError);
    CHECK_THROWS_AS(unproject_pixel(1.0, 1.0, NAN, vga()), InvalidDepthError);
  }

  TEST_CASE("project matches an independent pinhole oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> xy(-2.0, 2.0), z(0.1, 50.0);
    const CameraIntrinsics k = vga();
    for (int i = 0; i < 1000; ++i) {
      const oracle::Vec3 p{xy(rng), xy(rng), z(rng)};
      const auto expect = oracle::project(k, p);
      const Projection got = project_point({p[0], p[1], p[2]}, k);
      REQUIRE(got.u == doctest::Approx(expect[0]).epsilon(1e-12));
      REQUIRE(got.v == doctest::Approx(expect[1]).epsilon(1e-12));
    }
  }

  TEST_CASE("project inverts unproject for random intrinsics") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> f(20.0, 2000.0), unit(0.0, 1.0);
    std::uniform_int_distribution<int> size(8, 2000);
    for (int trial = 0; trial < 20000; ++trial) {
      CameraIntrinsics k;
      k.width = size(rng);
      k.height = size(rng);
      k.fx = f(rng);
      k.fy = f(rng);
      k.cx = unit(rng) * (k.width - 1);
      k.cy = unit(rng) * (k.height - 1);
      const double u = unit(rng) * (k.width - 1);
      const double v = unit(rng) * (k.height - 1);
      const double d = std::exp(std::log(1e-3) + unit(rng) * (std::log(1e3) - std::log(1e-3)));
      const Projection q = project_point(unproject_pixel(u, v, d, k), k);
      REQUIRE(std::abs(q.u - u) < 1e-4);
      REQUIRE(std::abs(q.v - v) < 1e-4);
      REQUIRE(std::abs(q.depth - d) < 1e-9);
    }
  }

  TEST_CASE("lifting a 2x2 unit-depth frame enumerates the pixel rays") {
    CameraIntrinsics k;
    k.width = 2;
    k.height = 2;
    const ColorFrame color = oracle::random_frame(2, 2, 1);
    const DepthFrame depth(2, 2, 1.0f);
    const PointCloudFrame cloud = lift_frame(color, depth, k);
    REQUIRE(cloud.size() == 4);
    const Eigen::Vector3d expect[] = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
    for (int i = 0; i < 4; ++i) {
      CHECK(cloud.points[i].position == expect[i]);
      CHECK(cloud.points[i].src_pixel == PixelIndex{i / 2, i % 2});
      CHECK(cloud.points[i].color == color.at(i / 2, i % 2));
    }
  }

  TEST_CASE("lift keeps exactly the valid-depth pixels") {
    CameraIntrinsics k = CameraIntrinsics::with_default_fov(13, 9);
    CHECK(lift_frame(ColorFrame(13, 9), DepthFrame(13, 9, 0.0f), k).empty());

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> d(-1.0f, 3.0f);
    for (int trial = 0; trial < 20; ++trial) {
      DepthFrame depth(13, 9);
      for (float& v : depth.values()) v = d(rng);
      if (trial == 0) depth.at(2, 2) = INFINITY;
      if (trial == 1) depth.at(3, 3) = NAN;
      const PointCloudFrame cloud = lift_frame(oracle::random_frame(13, 9, trial), depth, k);
      CHECK(cloud.size() == count_valid_depth(depth));
      size_t manual = 0;
      for (float v : depth.values()) manual += (v > 0.0f && std::isfinite(v)) ? 1 : 0;
      CHECK(cloud.size() == manual);
    }
  }

  TEST_CASE("lift rejects mismatched shapes") {
    const CameraIntrinsics k = CameraIntrinsics::with_default_fov(4, 4);
    CHECK_THROWS_AS(lift_frame(ColorFrame(4, 4), DepthFrame(4, 3, 1.0f), k), ShapeError);
    CHECK_THROWS_AS(lift_frame(ColorFrame(5, 4), DepthFrame(5, 4, 1.0f), k), ShapeError);
    CHECK_THROWS_AS(lift_video({ColorFrame(4, 4)}, {}, k), ShapeError);
  }

  TEST_CASE("lift_video is frame-wise lift_frame") {
    const CameraIntrinsics k = CameraIntrinsics::with_default_fov(6, 5);
    Video colors;
    DepthVideo depths;
    for (int i = 0; i < 49; ++i) {
      colors.push_back(oracle::random_frame(6, 5, i));
      DepthFrame d(6, 5, 1.0f + 0.1f * i);
      d.at(0, i % 6) = 0.0f;
      depths.push_back(d);
    }
    const DynamicPointCloud cloud = lift_video(colors, depths, k);
    REQUIRE(cloud.frame_count() == 49);
    CHECK(cloud.intrinsics == k);
    for (int i = 0; i < 49; ++i) {
      const PointCloudFrame single = lift_frame(colors[i], depths[i], k);
      REQUIRE(cloud.frames[i].size() == single.size());
      CHECK(cloud.frames[i].size() == 29);
      for (size_t j = 0; j < single.size(); ++j) {
        CHECK(cloud.frames[i].points[j].position == single.points[j].position);
      }
    }
  }

  TEST_CASE("transform_points examples") {
    PointCloudFrame f;
    f.points.push_back({{0.0, 0.0, 2.0}, {1, 0, 0}, {0, 0}});
    f.points.push_back({{0.3, -0.7, 4.0}, {0, 1, 0}, {1, 2}});
    const PointCloudFrame same = transform_points(PoseSE3::identity(), f);
    CHECK(same.points[1].position == f.points[1].position);

    PoseSE3 back;
    back.translation = {0.0, 0.0, -0.5};
    const PointCloudFrame moved = transform_points(back, f);
    CHECK(moved.points[0].position == Eigen::Vector3d(0.0, 0.0, 1.5));
    CHECK(moved.points[1].color == f.points[1].color);
    CHECK(moved.points[1].src_pixel == f.points[1].src_pixel);

    // Nothing is culled, even points pushed behind the camera.
    PoseSE3 far;
    far.translation = {0.0, 0.0, -10.0};
    CHECK(transform_points(far, f).size() == 2);
  }

  TEST_CASE("transform_points is rigid and invertible") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0.0, 2.0);
    PointCloudFrame f;
    for (int i = 0; i < 60; ++i) f.points.push_back({{n(rng), n(rng), n(rng)}, {}, {}});
    for (int trial = 0; trial < 20; ++trial) {
      const PoseSE3 p = random_pose(rng);
      const PointCloudFrame g = transform_points(p, f);
      for (size_t i = 0; i < f.size(); ++i) {
        for (size_t j = i + 1; j < f.size(); ++j) {
          const double before = (f.points[i].position - f.points[j].position).norm();
          const double after = (g.points[i].position - g.points[j].position).norm();
          REQUIRE(std::abs(after - before) <= 1e-6 * before);
        }
      }
      const PointCloudFrame back = transform_points(invert(p), g);
      for (size_t i = 0; i < f.size(); ++i) {
        REQUIRE((back.points[i].position - f.points[i].position).norm() < 1e-6);
      }
    }
  }

  TEST_CASE("compose and invert form a group") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      const PoseSE3 a = random_pose(rng);
      const PoseSE3 b = random_pose(rng);
      const PoseSE3 c = random_pose(rng);
      CHECK(near(compose(PoseSE3::identity(), a), a, 0.0 + 1e-15));
      CHECK(near(invert(invert(a)), a, 1e-9));
      CHECK(near(compose(a, invert(a)), PoseSE3::identity(), 1e-9));
      CHECK(near(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-9));
      CHECK(compose(a, b).is_valid());
      CHECK(invert(a).is_valid());
      const Eigen::Vector3d p(0.2, -1.0, 3.0);
      CHECK((compose(a, b).apply(p) - a.apply(b.apply(p))).norm() < 1e-9);
    }
  }

  TEST_CASE("axis-angle construction matches Rodrigues' formula") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
      const double a = angle(rng);
      const PoseSE3 p = PoseSE3::from_axis_angle(axis, a);
      const oracle::Mat3 r = oracle::axis_angle({axis.x(), axis.y(), axis.z()}, a);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) REQUIRE(p.rotation(i, j) == doctest::Approx(r[i][j]).epsilon(1e-12));
      }
      CHECK(p.rotation_angle() == doctest::Approx(std::abs(a)).epsilon(1e-9));
    }
  }

  TEST_CASE("pose validation") {
    PoseSE3 p;
    CHECK(p.is_valid());
    p.rotation(0, 0) = 1.1;
    CHECK_FALSE(p.is_valid());
    CHECK_THROWS_AS(p.validate(), ValidationError);
    PoseSE3 mirror;
    mirror.rotation(2, 2) = -1.0;  // orthonormal but a reflection
    CHECK_FALSE(mirror.is_valid());
    PoseSE3 nan_t;
    nan_t.translation.x() = NAN;
    CHECK_FALSE(nan_t.is_valid());
  }

  TEST_CASE("intrinsics validation and default field of view") {
    const CameraIntrinsics k = CameraIntrinsics::with_default_fov(64, 48);
    CHECK_NOTHROW(k.validate());
    CHECK(2.0 * std::atan((k.width / 2.0) / k.fx) == doctest::Approx(M_PI / 3.0).epsilon(1e-12));
    CHECK(k.fy == k.fx);
    CHECK(k.cx == 32.0);
    CHECK(k.cy == 24.0);

    CameraIntrinsics bad = k;
    bad.fx = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = k;
    bad.cx = 64.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = k;
    bad.height = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }

  TEST_CASE("median depth ignores invalid pixels") {
    DepthFrame d(3, 1);
    CHECK(median_depth(d) == 0.0);
    d.at(0, 0) = 4.0f;
    d.at(0, 1) = 0.0f;
    d.at(0, 2) = 2.0f;
    CHECK(median_depth(d) == 4.0);  // upper median for an even count
    d.at(0, 1) = 1.0f;
    CHECK(median_depth(d) == doctest::Approx(2.0));
  }
}

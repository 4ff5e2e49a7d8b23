#include <cmath>
#include <random>

#include "doctest.h"
#include "trajcraft/errors.hpp"
#include "trajcraft/trajectory.hpp"
#include "unit/oracles.hpp"

using namespace trajcraft;

namespace {

constexpr double kDeg = M_PI / 180.0;

oracle::Mat3 to_oracle(const Eigen::Matrix3d& m) {
  oracle::Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = m(i, j);
  return out;
}

double max_diff(const Eigen::Matrix3d& a, const oracle::Mat3& b) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(a(i, j) - b[i][j]));
  return d;
}

PoseSE3 random_pose(std::mt19937_64& rng, double max_angle = M_PI) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> a(-max_angle, max_angle);
  return PoseSE3::from_axis_angle(Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized(), a(rng),
                                  Eigen::Vector3d(n(rng), n(rng), n(rng)));
}

}  // namespace

TEST_SUITE("trajectory") {
  TEST_CASE("a zero-degree orbit stays at the source view") {
    const Trajectory t = generate(OrbitParams{Eigen::Vector3d::UnitY(), 0.0, 2.0}, 7);
    REQUIRE(t.size() == 7);
    for (const PoseSE3& p : t.poses) {
      CHECK(p.rotation == Eigen::Matrix3d::Identity());
      CHECK(p.translation.norm() == 0.0);
    }
  }

  TEST_CASE("a 90 degree orbit about +y rotates about the pivot") {
    const Trajectory t = generate(OrbitParams{Eigen::Vector3d::UnitY(), 90.0, 2.0}, 5);
    const oracle::Mat3 ry = oracle::axis_angle({0, 1, 0}, 90.0 * kDeg);
    const PoseSE3& last = t[4];
    CHECK(max_diff(last.rotation, ry) < 1e-12);
    const oracle::Vec3 rc = oracle::mul(ry, oracle::Vec3{0, 0, 2});
    CHECK(last.translation.x() == doctest::Approx(0.0 - rc[0]).epsilon(1e-12));
    CHECK(last.translation.y() == doctest::Approx(0.0 - rc[1]).epsilon(1e-12));
    CHECK(last.translation.z() == doctest::Approx(2.0 - rc[2]).epsilon(1e-12));
    // (I - Ry(90)) (0, 0, 2) = (-2, 0, 2).
    CHECK(last.translation.x() == doctest::Approx(-2.0));
    CHECK(last.translation.z() == doctest::Approx(2.0));
    // The pivot itself never moves.
    for (const PoseSE3& p : t.poses) CHECK((p.apply({0, 0, 2}) - Eigen::Vector3d(0, 0, 2)).norm() < 1e-12);
    CHECK(t[0].rotation == Eigen::Matrix3d::Identity());
    CHECK(t[2].rotation_angle() == doctest::Approx(45.0 * kDeg));
  }

  TEST_CASE("dolly interpolates the displacement linearly") {
    const Trajectory t = generate(DollyParams{{0.0, 0.0, -1.0}}, 3);
    REQUIRE(t.size() == 3);
    CHECK(t[0].translation == Eigen::Vector3d(0, 0, 0));
    CHECK(t[1].translation == Eigen::Vector3d(0, 0, -0.5));
    CHECK(t[2].translation == Eigen::Vector3d(0, 0, -1.0));
    CHECK(generate(DollyParams{{1.0, 2.0, 3.0}}, 1)[0].translation.norm() == 0.0);
  }

  TEST_CASE("pan rotates about the camera center") {
    const Trajectory t = generate(PanParams{Eigen::Vector3d::UnitX(), 30.0}, 4);
    CHECK(t[0].rotation == Eigen::Matrix3d::Identity());
    CHECK(max_diff(t[3].rotation, oracle::axis_angle({1, 0, 0}, 30.0 * kDeg)) < 1e-12);
    CHECK(max_diff(t[1].rotation, oracle::axis_angle({1, 0, 0}, 10.0 * kDeg)) < 1e-12);
    for (const PoseSE3& p : t.poses) CHECK(p.translation.norm() == 0.0);
  }

  TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(generate(DollyParams{}, 0), ValidationError);
    CHECK_THROWS_AS(generate(OrbitParams{Eigen::Vector3d::Zero(), 10.0, 2.0}, 3), ValidationError);
    CHECK_THROWS_AS(generate(OrbitParams{Eigen::Vector3d::UnitY(), 10.0, std::nullopt}, 3),
                    ValidationError);
    CHECK_THROWS_AS(generate(OrbitParams{Eigen::Vector3d::UnitY(), 10.0, -1.0}, 3), ValidationError);
    CHECK_THROWS_AS(generate(PanParams{Eigen::Vector3d(NAN, 0, 0), 10.0}, 3), ValidationError);
    CHECK_THROWS_AS(generate(DollyParams{{INFINITY, 0, 0}}, 3), ValidationError);
  }

  TEST_CASE("generated poses are rigid and deterministic") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> deg(-360.0, 360.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Vector3d axis(n(rng), n(rng), n(rng));
      const TrajectorySpec specs[] = {OrbitParams{axis, deg(rng), 0.5 + std::abs(n(rng))},
                                      PanParams{axis, deg(rng)},
                                      DollyParams{axis}};
      for (const TrajectorySpec& s : specs) {
        const Trajectory a = generate(s, 13);
        const Trajectory b = generate(s, 13);
        for (int i = 0; i < 13; ++i) {
          CHECK(a[i].is_valid(1e-9));
          CHECK(a[i].rotation == b[i].rotation);
          CHECK(a[i].translation == b[i].translation);
        }
        CHECK_NOTHROW(a.validate());
      }
    }
  }

  TEST_CASE("keyframe midpoint is the slerp midpoint") {
    const PoseSE3 ry90 = PoseSE3::from_axis_angle(Eigen::Vector3d::UnitY(), 90.0 * kDeg);
    const Trajectory t = interpolate_keyframes({{0, PoseSE3::identity()}, {2, ry90}}, 3);
    CHECK(max_diff(t[1].rotation, oracle::axis_angle({0, 1, 0}, 45.0 * kDeg)) < 1e-6);
  }

  TEST_CASE("keyframe interpolation matches an independent slerp") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const PoseSE3 a = random_pose(rng);
      const PoseSE3 b = random_pose(rng);
      const int n = 6;
      const Trajectory t = interpolate_keyframes({{0, a}, {n - 1, b}}, n);
      const oracle::Quat qa = oracle::to_quat(to_oracle(a.rotation));
      const oracle::Quat qb = oracle::to_quat(to_oracle(b.rotation));
      for (int i = 0; i < n; ++i) {
        const double s = double(i) / (n - 1);
        CHECK(max_diff(t[i].rotation, oracle::to_mat(oracle::slerp(qa, qb, s))) < 1e-9);
        CHECK((t[i].translation - ((1 - s) * a.translation + s * b.translation)).norm() < 1e-12);
        CHECK(t[i].is_valid(1e-9));
      }
    }
  }

  TEST_CASE("keyframes are reproduced exactly at their indices") {
    std::mt19937_64 rng(37);
    const std::vector<Keyframe> keys = {{0, random_pose(rng)}, {3, random_pose(rng)},
                                        {4, random_pose(rng)}, {9, random_pose(rng)}};
    const Trajectory t = interpolate_keyframes(keys, 10);
    for (const Keyframe& k : keys) {
      CHECK(t[k.index].rotation == k.pose.rotation);
      CHECK(t[k.index].translation == k.pose.translation);
    }
    const Trajectory same = generate(KeyframeParams{keys}, 10);
    for (int i = 0; i < 10; ++i) CHECK(same[i].rotation == t[i].rotation);
  }

  TEST_CASE("identical keys give a constant trajectory") {
    std::mt19937_64 rng(41);
    const PoseSE3 p = random_pose(rng);
    const Trajectory t = interpolate_keyframes({{0, p}, {7, p}}, 8);
    for (const PoseSE3& q : t.poses) {
      CHECK((q.rotation - p.rotation).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((q.translation - p.translation).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(interpolate_keyframes({{0, p}}, 1)[0].rotation == p.rotation);
  }

  TEST_CASE("malformed key lists are rejected") {
    const PoseSE3 id;
    CHECK_THROWS_AS(interpolate_keyframes({}, 3), ValidationError);
    CHECK_THROWS_AS(interpolate_keyframes({{0, id}, {0, id}, {2, id}}, 3), ValidationError);
    CHECK_THROWS_AS(interpolate_keyframes({{0, id}, {2, id}, {1, id}}, 3), ValidationError);
    CHECK_THROWS_AS(interpolate_keyframes({{1, id}, {2, id}}, 3), ValidationError);
    CHECK_THROWS_AS(interpolate_keyframes({{0, id}, {1, id}}, 3), ValidationError);
    PoseSE3 bad;
    bad.rotation *= 2.0;
    CHECK_THROWS_AS(interpolate_keyframes({{0, id}, {2, bad}}, 3), ValidationError);
  }

  TEST_CASE("sample_transform respects its ranges") {
    CHECK(sample_transform(5, {}).rotation == Eigen::Matrix3d::Identity());
    CHECK(sample_transform(5, {}).translation.norm() == 0.0);

    TransformRanges r;
    r.max_rotation_degrees = 15.0;
    r.max_translation = {0.1, 0.2, 0.3};
    double max_angle = 0.0;
    Eigen::Vector3d max_t = Eigen::Vector3d::Zero();
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const PoseSE3 p = sample_transform(seed, r);
      REQUIRE(p.is_valid(1e-9));
      max_angle = std::max(max_angle, p.rotation_angle());
      max_t = max_t.cwiseMax(p.translation.cwiseAbs());
    }
    CHECK(max_angle <= 15.0 * kDeg + 1e-12);
    CHECK(max_angle > 14.5 * kDeg);  // the bound is actually reached
    CHECK((max_t.array() <= r.max_translation.array()).all());
    CHECK((max_t.array() > 0.97 * r.max_translation.array()).all());

    const PoseSE3 a = sample_transform(77, r);
    const PoseSE3 b = sample_transform(77, r);
    CHECK(a.rotation == b.rotation);
    CHECK(a.translation == b.translation);
    CHECK(sample_transform(78, r).rotation != a.rotation);

    r.max_rotation_degrees = -1.0;
    CHECK_THROWS_AS(sample_transform(1, r), ValidationError);
  }

  TEST_CASE("curation defaults") {
    const TransformRanges r = default_curation_ranges(4.0);
    CHECK(r.max_rotation_degrees == 15.0);
    CHECK(r.max_translation == Eigen::Vector3d::Constant(0.6));
  }

  TEST_CASE("trajectory JSON round-trips and follows the schema") {
    std::mt19937_64 rng(43);
    Trajectory t;
    for (int i = 0; i < 5; ++i) t.poses.push_back(random_pose(rng));
    const nlohmann::json j = trajectory_to_json(t);
    CHECK(j.at("n") == 5);
    CHECK(j.at("poses").size() == 5);
    CHECK(j.at("poses")[0].at("r").size() == 9);
    CHECK(j.at("poses")[0].at("t").size() == 3);
    CHECK(j.at("poses")[2].at("r")[1].get<double>() == t[2].rotation(0, 1));

    const Trajectory back = trajectory_from_json(nlohmann::json::parse(j.dump()));
    for (int i = 0; i < 5; ++i) {
      CHECK(back[i].rotation == t[i].rotation);
      CHECK(back[i].translation == t[i].translation);
    }
  }

  TEST_CASE("malformed trajectory JSON is a validation error") {
    const nlohmann::json pose = pose_to_json(PoseSE3::identity());
    CHECK_THROWS_AS(trajectory_from_json({{"n", 2}, {"poses", {pose}}}), ValidationError);
    CHECK_THROWS_AS(trajectory_from_json({{"poses", {pose}}}), ValidationError);
    CHECK_THROWS_AS(trajectory_from_json(nlohmann::json::array()), ValidationError);
    nlohmann::json short_r = pose;
    short_r["r"].erase(0);
    CHECK_THROWS_AS(pose_from_json(short_r), ValidationError);
    nlohmann::json scaled = pose;
    scaled["r"][0] = 3.0;
    CHECK_THROWS_AS(trajectory_from_json({{"n", 1}, {"poses", {scaled}}}), ValidationError);
    nlohmann::json text = pose;
    text["t"][1] = "x";
    CHECK_THROWS_AS(pose_from_json(text), ValidationError);
  }

  TEST_CASE("spec JSON round-trips for every kind") {
    std::mt19937_64 rng(47);
    const TrajectorySpec specs[] = {
        OrbitParams{Eigen::Vector3d(0.0, 1.0, 0.2), 40.0, 3.0},
        OrbitParams{Eigen::Vector3d::UnitY(), -20.0, std::nullopt},
        DollyParams{{0.1, 0.0, -0.7}},
        PanParams{Eigen::Vector3d::UnitX(), 12.5},
        KeyframeParams{{{0, random_pose(rng)}, {4, random_pose(rng)}}},
    };
    for (const TrajectorySpec& s : specs) {
      const nlohmann::json j = spec_to_json(s);
      CHECK(spec_to_json(spec_from_json(nlohmann::json::parse(j.dump()))) == j);
    }
    CHECK(spec_to_json(specs[0]).at("kind") == "orbit");
    CHECK(spec_to_json(specs[4]).at("kind") == "keyframes");
    CHECK_THROWS_AS(spec_from_json({{"kind", "spiral"}}), ValidationError);
    CHECK_THROWS_AS(spec_from_json({{"kind", "pan"}, {"params", nlohmann::json::object()}}),
                    ValidationError);
    CHECK_THROWS_AS(spec_from_json({{"params", nlohmann::json::object()}}), ValidationError);
  }
}

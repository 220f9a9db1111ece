#include "rvw/geometry.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rvw;
using namespace rvw::geo;

namespace {

double deg(double d) { return deg_to_rad(d); }

}  // namespace

TEST(PixelToDir, ImageCenterIsForward)
{
    const Direction d = pixel_to_dir({959.5, 479.5}, 1920, 960);
    EXPECT_NEAR(d.lat(), 0.0, 1e-12);
    EXPECT_NEAR(d.lon(), 0.0, 1e-12);
    EXPECT_NEAR(d.z(), 1.0, 1e-12);
}

TEST(PixelToDir, QuarterTurnLeft)
{
    const Direction d = pixel_to_dir({479.5, 479.5}, 1920, 960);
    EXPECT_NEAR(d.x(), -1.0, 1e-12);
    EXPECT_NEAR(d.y(), 0.0, 1e-12);
    EXPECT_NEAR(d.z(), 0.0, 1e-12);
}

TEST(PixelToDir, MatchesSphericalOracleAtPixelCenters)
{
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> ux(0, 511);
    std::uniform_int_distribution<int> uy(0, 255);
    for (int i = 0; i < 2000; ++i) {
        const int x = ux(rng);
        const int y = uy(rng);
        const Vec3 expect = oracle::pixel_center_dir(x, y, 512, 256);
        const Direction got = pixel_to_dir({static_cast<double>(x), static_cast<double>(y)}, 512, 256);
        EXPECT_LT((got.vec() - expect).norm(), 1e-12);
    }
}

TEST(PixelToDir, WrapsInU)
{
    const Direction a = pixel_to_dir({10.25, 100.0}, 400, 200);
    const Direction b = pixel_to_dir({410.25, 100.0}, 400, 200);
    const Direction c = pixel_to_dir({-389.75, 100.0}, 400, 200);
    EXPECT_LT((a.vec() - b.vec()).norm(), 1e-12);
    EXPECT_LT((a.vec() - c.vec()).norm(), 1e-12);
}

TEST(PixelToDir, ClampsInV)
{
    const Direction top = pixel_to_dir({5.0, -10.0}, 400, 200);
    EXPECT_NEAR(top.lat(), kPi / 2.0, 1e-12);
    const Direction bottom = pixel_to_dir({5.0, 1e6}, 400, 200);
    EXPECT_NEAR(bottom.lat(), -kPi / 2.0, 1e-12);
}

TEST(DirToPixel, ForwardIsImageCenter)
{
    const PixelCoord p = dir_to_pixel(Direction::from_lat_lon(0.0, 0.0), 1920, 960);
    EXPECT_NEAR(p.u, 959.5, 1e-9);
    EXPECT_NEAR(p.v, 479.5, 1e-9);
}

TEST(DirToPixel, NadirRowWithCanonicalLongitude)
{
    for (const double lon : {0.0, 1.0, -2.5}) {
        const PixelCoord p = dir_to_pixel(Direction::from_lat_lon(-kPi / 2.0, lon), 1920, 960);
        EXPECT_NEAR(p.v, 959.5, 1e-9);
        EXPECT_NEAR(p.u, 959.5, 1e-9);
    }
}

TEST(DirToPixel, RoundTripRandomPixels)
{
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> uu(0.0, 1920.0);
    std::uniform_real_distribution<double> vv(0.0, 959.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const PixelCoord p{uu(rng), vv(rng)};
        const PixelCoord q = dir_to_pixel(pixel_to_dir(p, 1920, 960), 1920, 960);
        double du = std::abs(p.u - q.u);
        du = std::min(du, 1920.0 - du);
        worst = std::max({worst, du, std::abs(p.v - q.v)});
    }
    EXPECT_LE(worst, 1e-6);
}

TEST(DirToPixel, RoundTripRandomDirections)
{
    std::mt19937 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const Direction d = Direction::from_vector(Vec3(n(rng), n(rng), n(rng)));
        if (std::abs(d.y()) > 0.999999) {
            continue;
        }
        const PixelCoord p = dir_to_pixel(d, 1920, 960);
        EXPECT_GE(p.u, 0.0);
        EXPECT_LT(p.u, 1920.0);
        const Direction back = pixel_to_dir(p, 1920, 960);
        EXPECT_LT((back.vec() - d.vec()).norm(), 1e-9);
    }
}

TEST(Direction, LatLonRoundTrip)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> lat(-kPi / 2.0 + 1e-6, kPi / 2.0 - 1e-6);
    std::uniform_real_distribution<double> lon(-kPi, kPi);
    for (int i = 0; i < 1000; ++i) {
        const double a = lat(rng);
        const double b = lon(rng);
        const Direction d = Direction::from_lat_lon(a, b);
        EXPECT_NEAR(d.vec().norm(), 1.0, 1e-12);
        EXPECT_NEAR(d.lat(), a, 1e-9);
        EXPECT_NEAR(wrap_angle(d.lon() - b), 0.0, 1e-9);
    }
}

TEST(Direction, PolesCanonicalizeLongitude)
{
    EXPECT_EQ(Direction::from_lat_lon(kPi / 2.0, 2.0).lon(), 0.0);
    EXPECT_EQ(Direction::from_vector(Vec3(0, -3, 0)).lon(), 0.0);
}

TEST(Direction, RejectsZeroVector) { EXPECT_THROW(Direction::from_vector(Vec3::Zero()), std::invalid_argument); }

TEST(WrapAngle, HalfOpenRange)
{
    EXPECT_NEAR(wrap_angle(kPi), -kPi, 1e-12);
    EXPECT_NEAR(wrap_angle(3 * kPi + 0.5), -kPi + 0.5, 1e-9);
    EXPECT_NEAR(wrap_angle(-0.25), -0.25, 1e-15);
}

TEST(RotationToCenter, ForwardGivesIdentity)
{
    const Rotation r = rotation_to_center(Direction());
    EXPECT_TRUE(r.matrix().isApprox(Mat3::Identity(), 0.0));
}

TEST(RotationToCenter, BackwardGivesHalfTurnAboutX)
{
    const Rotation r = rotation_to_center(Direction::from_vector(Vec3(0, 0, -1)));
    EXPECT_LT((r.apply(Vec3(0, 0, -1)) - Vec3(0, 0, 1)).norm(), 1e-12);
    EXPECT_LT((r.apply(Vec3(1, 0, 0)) - Vec3(1, 0, 0)).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(RotationToCenter, NadirPitchesUp)
{
    const Rotation r = rotation_to_center(Direction::from_vector(Vec3(0, -1, 0)));
    EXPECT_LT((r.apply(Vec3(0, -1, 0)) - Vec3(0, 0, 1)).norm(), 1e-12);
    EXPECT_LT((r.apply(Vec3(0, 0, 1)) - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(RotationToCenter, RandomCentersProperties)
{
    std::mt19937 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const Direction c = Direction::from_vector(Vec3(n(rng), n(rng), n(rng)));
        const Rotation r = rotation_to_center(c);
        EXPECT_LE((r.apply(c.vec()) - Vec3(0, 0, 1)).norm(), 1e-9);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
        EXPECT_LE(oracle::orthonormality_error(r.matrix()), 1e-9);
    }
}

TEST(Rotation, CompositionAndInverse)
{
    const Rotation a = Rotation::axis_angle(Vec3(1, 2, 3), 0.7);
    const Rotation b = Rotation::axis_angle(Vec3(-1, 0, 2), -1.3);
    const Rotation ab = a * b;
    const Vec3 v(0.3, -0.2, 0.9);
    EXPECT_LT((ab.apply(v) - a.apply(b.apply(v))).norm(), 1e-12);
    EXPECT_LT(((ab * ab.inverse()).matrix() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_LE(oracle::orthonormality_error(ab.matrix()), 1e-12);
}

TEST(Rotation, FromMatrixRejectsNonRotations)
{
    Mat3 m = Mat3::Identity();
    m(0, 0) = -1.0;
    EXPECT_THROW(Rotation::from_matrix(m), std::invalid_argument);
    EXPECT_THROW(Rotation::from_matrix(2.0 * Mat3::Identity()), std::invalid_argument);
    EXPECT_NO_THROW(Rotation::from_matrix(Rotation::axis_angle(Vec3(0, 1, 0), 0.4).matrix()));
}

TEST(SpheroidTextureAngle, UnitSphereIsIdentity)
{
    EXPECT_NEAR(spheroid_texture_angle({1.0, 60.0}, deg(30)), deg(30), 1e-15);
}

TEST(SpheroidTextureAngle, ElongationForThirtyDegreesGivesFiftyFive)
{
    // k from the ray-intersection oracle, not from the closed form
    const double k = oracle::solve_k_by_bisection(110.0, 60.0);
    EXPECT_NEAR(rad_to_deg(spheroid_texture_angle({k, 60.0}, deg(30))), 55.0, 1e-6);
}

TEST(SpheroidTextureAngle, ForwardIsFixed)
{
    for (const double k : {1.0, 2.0, 7.5}) {
        EXPECT_EQ(spheroid_texture_angle({k, 60.0}, 0.0), 0.0);
    }
}

TEST(SpheroidTextureAngle, AgreesWithRayIntersection)
{
    for (const double k : {1.0, 1.5, 2.5, 4.0}) {
        for (int t = 1; t <= 89; ++t) {
            EXPECT_NEAR(spheroid_texture_angle({k, 60.0}, deg(t)), oracle::texture_angle_by_ray(k, deg(t)), 1e-9)
                << "k=" << k << " theta=" << t;
        }
    }
}

TEST(SpheroidTextureAngle, RejectsRightAngle)
{
    EXPECT_THROW(spheroid_texture_angle({2.0, 60.0}, kPi / 2.0), std::exception);
}

TEST(EffectiveFov, UnitSphereKeepsCameraFov) { EXPECT_NEAR(effective_fov({1.0, 60.0}), 60.0, 1e-12); }

TEST(EffectiveFov, ReachesOneTenWithOracleK)
{
    const double k = oracle::solve_k_by_bisection(110.0, 60.0);
    EXPECT_NEAR(effective_fov({k, 60.0}), 110.0, 1e-4);
    EXPECT_NEAR(effective_fov({k, 60.0}), oracle::spheroid_fov_by_ray(k, 60.0), 1e-9);
}

TEST(EffectiveFov, MonotoneInK)
{
    double prev = effective_fov({1.0, 60.0});
    for (double k = 1.01; k <= 5.0; k += 0.01) {
        const double f = effective_fov({k, 60.0});
        EXPECT_GT(f, prev);
        prev = f;
    }
}

TEST(SolveK, EqualFovsGiveUnitSphere) { EXPECT_NEAR(solve_k(60.0, 60.0), 1.0, 1e-15); }

TEST(SolveK, OneTenFromSixtyMatchesOracle)
{
    const double k = solve_k(110.0, 60.0);
    EXPECT_NEAR(k, oracle::solve_k_by_bisection(110.0, 60.0), 1e-9);
    EXPECT_NEAR(k, 2.4736, 1e-4);
}

TEST(SolveK, RoundTripsThroughEffectiveFov)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> cam(1.0, 170.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double c = cam(rng);
        const double t = c + frac(rng) * (179.0 - c);
        EXPECT_NEAR(effective_fov({solve_k(t, c), c}), t, 1e-9) << "t=" << t << " c=" << c;
    }
}

TEST(SolveK, RejectsInvalidPairs)
{
    EXPECT_THROW(solve_k(50.0, 60.0), std::exception);
    EXPECT_THROW(solve_k(180.0, 60.0), std::exception);
    EXPECT_THROW(solve_k(90.0, 0.0), std::exception);
}

TEST(SpheroidMesh, UnitSphereVerticesOnRadiusOne)
{
    const SpheroidMesh m = spheroid_mesh({1.0, 60.0}, 16, 32);
    for (const Vec3& p : m.positions) {
        EXPECT_NEAR(p.norm(), 1.0, 1e-12);
    }
}

TEST(SpheroidMesh, VerticesOnSpheroidSurface)
{
    const double k = solve_k(110.0, 60.0);
    const SpheroidMesh m = spheroid_mesh({k, 60.0}, 24, 48);
    EXPECT_EQ(m.positions.size(), static_cast<std::size_t>(m.rings * m.columns));
    EXPECT_EQ(m.uvs.size(), m.positions.size());
    for (const Vec3& p : m.positions) {
        EXPECT_NEAR(p.x() * p.x() + p.y() * p.y() + (p.z() / k) * (p.z() / k), 1.0, 1e-9);
    }
}

TEST(SpheroidMesh, ForwardVertexHasCenterUv)
{
    const SpheroidMesh m = spheroid_mesh({2.0, 60.0}, 16, 32);
    std::size_t best = 0;
    for (std::size_t i = 0; i < m.positions.size(); ++i) {
        if (m.positions[i].normalized().z() > m.positions[best].normalized().z()) {
            best = i;
        }
    }
    EXPECT_NEAR(m.uvs[best][0], 0.5, 1e-9);
    EXPECT_NEAR(m.uvs[best][1], 0.5, 1e-9);
}

TEST(SpheroidMesh, TrianglesFaceTheCenter)
{
    const SpheroidMesh m = spheroid_mesh({2.0, 60.0}, 12, 24);
    ASSERT_FALSE(m.triangles.empty());
    for (const auto& t : m.triangles) {
        const Vec3& a = m.positions[t[0]];
        const Vec3& b = m.positions[t[1]];
        const Vec3& c = m.positions[t[2]];
        const Vec3 normal = (b - a).cross(c - a);
        ASSERT_GT(normal.norm(), 0.0);
        EXPECT_LT(normal.dot((a + b + c) / 3.0), 0.0);
    }
}

TEST(SpheroidMesh, RejectsTooCoarseLattice)
{
    EXPECT_THROW(spheroid_mesh({1.0, 60.0}, 1, 8), std::exception);
    EXPECT_THROW(spheroid_mesh({1.0, 60.0}, 4, 2), std::exception);
}

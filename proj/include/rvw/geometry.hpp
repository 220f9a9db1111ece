#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <array>
#include <cstdint>
#include <vector>

// Equirectangular (ERP) raster <-> sphere conversions, recentering rotations
// and the elongated-spheroid projection surface.
//
// Axes: x right, y up, z forward. Latitude phi in [-pi/2, pi/2], longitude
// lambda in [-pi, pi) with lambda = 0 looking forward. On a w x h raster the
// continuous coordinate (u, v) = (i, j) sits on the center of pixel column i,
// row j (rows counted downward from the zenith).
namespace rvw::geo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

double deg_to_rad(double degrees);
double rad_to_deg(double radians);

// Wraps an angle into [-pi, pi).
double wrap_angle(double radians);

class Direction {
public:
    // Forward (0, 0, 1).
    Direction() = default;

    // Normalizes `v`; throws std::invalid_argument for a zero or non-finite vector.
    static Direction from_vector(const Vec3& v);
    static Direction from_lat_lon(double lat, double lon);

    const Vec3& vec() const { return v_; }
    double x() const { return v_.x(); }
    double y() const { return v_.y(); }
    double z() const { return v_.z(); }

    double lat() const;
    // Canonicalized to 0 at the poles.
    double lon() const;

private:
    explicit Direction(const Vec3& unit) : v_(unit) {}
    Vec3 v_{0.0, 0.0, 1.0};
};

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

class Rotation {
public:
    Rotation() = default;

    static Rotation identity() { return Rotation(); }
    // Right-handed rotation of `angle` radians about `axis` (normalized here).
    static Rotation axis_angle(const Vec3& axis, double angle);
    // Throws std::invalid_argument unless `m` is orthonormal with det +1 (1e-9).
    static Rotation from_matrix(const Mat3& m);

    const Mat3& matrix() const { return m_; }
    Rotation inverse() const;
    double determinant() const { return m_.determinant(); }

    Vec3 apply(const Vec3& v) const { return m_ * v; }
    Direction apply(const Direction& d) const;

    friend Rotation operator*(const Rotation& a, const Rotation& b);

private:
    explicit Rotation(const Mat3& m) : m_(m) {}
    Mat3 m_ = Mat3::Identity();
};

// u wraps modulo w; v is clamped to the latitude range [-0.5, h - 0.5].
Direction pixel_to_dir(PixelCoord p, int w, int h);
// Exact inverse of pixel_to_dir; u is wrapped into [0, w).
PixelCoord dir_to_pixel(const Direction& d, int w, int h);

// Rotation taking `c` onto the forward axis, about the axis c x z.
Rotation rotation_to_center(const Direction& c);

// Projection surface stretched by `k` along the camera's forward axis.
struct Spheroid {
    double k = 1.0;
    double camera_fov_deg = 60.0;
};

// Angle from the forward axis of the texture direction seen by a camera ray
// at `theta` radians from the forward axis: atan(k tan theta).
double spheroid_texture_angle(const Spheroid& s, double theta);
// Effective field of view in degrees.
double effective_fov(const Spheroid& s);
// Elongation giving `target_fov_deg` for a camera with `camera_fov_deg`.
double solve_k(double target_fov_deg, double camera_fov_deg);

struct SpheroidMesh {
    std::vector<Vec3> positions;
    std::vector<std::array<double, 2>> uvs;
    std::vector<std::array<std::uint32_t, 3>> triangles;  // wound to face the center
    int rings = 0;    // vertex rows (n_lat + 1)
    int columns = 0;  // vertex columns (n_lon + 1, seam duplicated)
};

SpheroidMesh spheroid_mesh(const Spheroid& s, int n_lat, int n_lon);

}  // namespace rvw::geo

#include "rvw/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rvw::geo {

double deg_to_rad(double degrees) { return degrees * kPi / 180.0; }
double rad_to_deg(double radians) { return radians * 180.0 / kPi; }

double wrap_angle(double radians)
{
    double wrapped = std::fmod(radians + kPi, 2.0 * kPi);
    if (wrapped < 0.0) {
        wrapped += 2.0 * kPi;
    }
    wrapped -= kPi;
    // fmod can land exactly on +pi after the shift through rounding
    if (wrapped >= kPi) {
        wrapped -= 2.0 * kPi;
    }
    return wrapped;
}

Direction Direction::from_vector(const Vec3& v)
{
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::invalid_argument("direction from zero or non-finite vector");
    }
    return Direction(v / n);
}

Direction Direction::from_lat_lon(double lat, double lon)
{
    const double c = std::cos(lat);
    return Direction(Vec3(c * std::sin(lon), std::sin(lat), c * std::cos(lon)));
}

double Direction::lat() const
{
    return std::asin(std::clamp(v_.y(), -1.0, 1.0));
}

double Direction::lon() const
{
    if (std::abs(v_.x()) < 1e-15 && std::abs(v_.z()) < 1e-15) {
        return 0.0;
    }
    return wrap_angle(std::atan2(v_.x(), v_.z()));
}

Rotation Rotation::axis_angle(const Vec3& axis, double angle)
{
    const double n = axis.norm();
    if (!(n > 0.0)) {
        throw std::invalid_argument("rotation axis is zero");
    }
    return Rotation(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix());
}

Rotation Rotation::from_matrix(const Mat3& m)
{
    const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho <= 1e-9) || std::abs(m.determinant() - 1.0) > 1e-9) {
        throw std::invalid_argument("matrix is not a proper rotation");
    }
    return Rotation(m);
}

Rotation Rotation::inverse() const { return Rotation(m_.transpose()); }

Direction Rotation::apply(const Direction& d) const
{
    return Direction::from_vector(m_ * d.vec());
}

Rotation operator*(const Rotation& a, const Rotation& b) { return Rotation(a.m_ * b.m_); }

Direction pixel_to_dir(PixelCoord p, int w, int h)
{
    double u = std::fmod(p.u, static_cast<double>(w));
    if (u < 0.0) {
        u += w;
    }
    const double v = std::clamp(p.v, -0.5, h - 0.5);
    const double lon = 2.0 * kPi * (u + 0.5) / w - kPi;
    const double lat = kPi / 2.0 - kPi * (v + 0.5) / h;
    return Direction::from_lat_lon(lat, lon);
}

PixelCoord dir_to_pixel(const Direction& d, int w, int h)
{
    const double lon = d.lon();
    const double lat = d.lat();
    double u = (lon + kPi) * w / (2.0 * kPi) - 0.5;
    if (u < 0.0) {
        u += w;
    }
    if (u >= w) {
        u -= w;
    }
    const double v = (kPi / 2.0 - lat) * h / kPi - 0.5;
    return {u, v};
}

Rotation rotation_to_center(const Direction& c)
{
    const Vec3 forward(0.0, 0.0, 1.0);
    const Vec3 axis = c.vec().cross(forward);
    const double sin_angle = axis.norm();
    const double cos_angle = c.vec().dot(forward);
    if (sin_angle < 1e-15) {
        if (cos_angle > 0.0) {
            return Rotation::identity();
        }
        return Rotation::axis_angle(Vec3(1.0, 0.0, 0.0), kPi);
    }
    // atan2 keeps the angle accurate near 0 and pi where acos loses digits.
    return Rotation::axis_angle(axis, std::atan2(sin_angle, cos_angle));
}

namespace {

void check_spheroid(const Spheroid& s)
{
    if (!(s.k >= 1.0) || !std::isfinite(s.k)) {
        throw std::invalid_argument("spheroid elongation must be >= 1, got " + std::to_string(s.k));
    }
}

}  // namespace

double spheroid_texture_angle(const Spheroid& s, double theta)
{
    check_spheroid(s);
    if (!(theta >= 0.0) || !(theta < kPi / 2.0)) {
        throw std::invalid_argument("camera ray angle must be in [0, pi/2)");
    }
    return std::atan(s.k * std::tan(theta));
}

double effective_fov(const Spheroid& s)
{
    if (!(s.camera_fov_deg > 0.0) || !(s.camera_fov_deg < 180.0)) {
        throw std::invalid_argument("camera fov must be in (0, 180) degrees");
    }
    return 2.0 * rad_to_deg(spheroid_texture_angle(s, deg_to_rad(s.camera_fov_deg / 2.0)));
}

double solve_k(double target_fov_deg, double camera_fov_deg)
{
    if (!(camera_fov_deg > 0.0) || !(camera_fov_deg <= target_fov_deg) || !(target_fov_deg < 180.0)) {
        throw std::invalid_argument("solve_k requires 0 < camera_fov <= target_fov < 180");
    }
    return std::tan(deg_to_rad(target_fov_deg / 2.0)) / std::tan(deg_to_rad(camera_fov_deg / 2.0));
}

SpheroidMesh spheroid_mesh(const Spheroid& s, int n_lat, int n_lon)
{
    check_spheroid(s);
    if (n_lat < 2 || n_lon < 3) {
        throw std::invalid_argument("spheroid mesh needs n_lat >= 2 and n_lon >= 3");
    }
    SpheroidMesh mesh;
    mesh.rings = n_lat + 1;
    mesh.columns = n_lon + 1;
    mesh.positions.reserve(static_cast<std::size_t>(mesh.rings * mesh.columns));
    mesh.uvs.reserve(mesh.positions.capacity());

    for (int i = 0; i <= n_lat; ++i) {
        const double tv = static_cast<double>(i) / n_lat;
        const double lat = kPi / 2.0 - kPi * tv;
        for (int j = 0; j <= n_lon; ++j) {
            const double tu = static_cast<double>(j) / n_lon;
            const Direction d = Direction::from_lat_lon(lat, 2.0 * kPi * tu - kPi);
            mesh.positions.emplace_back(d.x(), d.y(), s.k * d.z());
            mesh.uvs.push_back({tu, tv});
        }
    }

    const auto index = [&](int i, int j) { return static_cast<std::uint32_t>(i * mesh.columns + j); };
    for (int i = 0; i < n_lat; ++i) {
        for (int j = 0; j < n_lon; ++j) {
            const std::uint32_t a = index(i, j);
            const std::uint32_t b = index(i, j + 1);
            const std::uint32_t c = index(i + 1, j);
            const std::uint32_t d = index(i + 1, j + 1);
            // Longitude grows toward -x seen from inside, so (a, b, c) is
            // counter-clockwise for a viewer at the center.
            if (i != 0) {
                mesh.triangles.push_back({a, b, c});
            }
            if (i != n_lat - 1) {
                mesh.triangles.push_back({b, d, c});
            }
        }
    }
    return mesh;
}

}  // namespace rvw::geo

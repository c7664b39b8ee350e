#pragma once

// Simplified SMPL-style parametric body: 24-joint kinematic tree with a
// linear joint-shape basis, a small rigidly-attached surface point set,
// and a weak-perspective camera. Canonical length unit is millimeters.

#include <array>
#include <vector>

#include "stamotion/common.hpp"

namespace stamotion {

inline constexpr int kNumJoints = 24;
inline constexpr int kNumBodyJoints = 23;  // excludes the root
inline constexpr int kShapeDim = 10;
inline constexpr int kParamDim = 85;    // [T(3) | R(3) | theta(69) | beta(10)]
inline constexpr int kPoseDim6d = 144;  // 24 rotations in 6d form

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

// Pose/shape/translation record Theta.
struct BodyParams {
    Vec3 trans{};                                      // root translation, mm
    Vec3 root_rot{};                                   // axis-angle
    std::array<Vec3, kNumBodyJoints> joint_rots{};     // axis-angle per joint
    std::array<double, kShapeDim> shape{};             // unitless

    std::array<double, kParamDim> pack() const;
    static BodyParams unpack(const double* v);
};

// Predicted and initialized camera scales are kept above this floor.
inline constexpr double kCamScaleFloor = 0.01;

struct WeakPerspCam {
    double s = 1.0;  // scale, > 0
    double tx = 0.0;
    double ty = 0.0;

    std::array<double, 3> pack() const { return {s, tx, ty}; }
    static WeakPerspCam unpack(const double* v) { return {v[0], v[1], v[2]}; }
};

struct SkeletonTemplate {
    std::array<int, kNumJoints> parent{};                    // parent[0] = -1
    std::array<Vec3, kNumJoints> rest_offsets{};             // bone offsets, mm
    std::vector<double> shape_basis;                         // [joint][axis][beta], 24*3*10
    std::vector<Vec3> vertex_template;                       // offsets from attachment joint
    std::vector<int> vertex_joint;                           // attachment joint per vertex

    int vertex_count() const { return static_cast<int>(vertex_template.size()); }
    double basis(int joint, int axis, int beta) const {
        return shape_basis[(static_cast<std::size_t>(joint) * 3 + axis) * kShapeDim + beta];
    }
};

// The fixed template shipped with the project: anthropometric base offsets
// with seeded jitter, all values exactly representable in float32 so the
// dataset serialization round-trips bitwise.
SkeletonTemplate default_template(int vertex_count = 128);

// Rodrigues formula; |aa| < 1e-8 falls back to the first-order expansion.
Mat3 aa_to_rotmat(const Vec3& aa);

// First two columns of the rotation matrix.
std::array<double, 6> rotmat_to_6d(const Mat3& rm);

// Gram-Schmidt the two 3-vector halves, complete with a cross product.
// Throws NumericError on zero or collinear halves.
Mat3 sixd_to_rotmat(const std::array<double, 6>& v);

// All 24 rotations as concatenated 6d blocks: [R | theta_1 .. theta_23].
std::array<double, kPoseDim6d> pack_pose_144(const Vec3& root_rot,
                                             const std::array<Vec3, kNumBodyJoints>& joint_rots);

struct FkResult {
    std::array<Mat3, kNumJoints> rot;  // global rotations
    std::array<Vec3, kNumJoints> pos;  // global joint positions, mm
};

// Shaped rest offsets accumulated down the tree with composed rotations;
// root carries the translation.
FkResult forward_kinematics_full(const BodyParams& p, const SkeletonTemplate& tmpl);
std::array<Vec3, kNumJoints> forward_kinematics(const BodyParams& p, const SkeletonTemplate& tmpl);

// Each template vertex rigidly transported by its attachment joint.
std::vector<Vec3> skin_vertices(const BodyParams& p, const SkeletonTemplate& tmpl);

// (u, v) = (s*x + tx, s*y + ty).
std::array<double, 2> project_weak(const WeakPerspCam& cam, const Vec3& point);
std::vector<std::array<double, 2>> project_weak(const WeakPerspCam& cam,
                                                const std::vector<Vec3>& points);

// Small vector helpers shared across modules.
inline Vec3 vadd(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 vsub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 vscale(const Vec3& a, double c) { return {a[0] * c, a[1] * c, a[2] * c}; }
inline double vdot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 vcross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double vnorm(const Vec3& a) { return std::sqrt(vdot(a, a)); }

inline Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }
inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int r = 0; r < 3; ++r)
        for (int j = 0; j < 3; ++j)
            c[r * 3 + j] = a[r * 3] * b[j] + a[r * 3 + 1] * b[3 + j] + a[r * 3 + 2] * b[6 + j];
    return c;
}
inline Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}
inline Mat3 mat3_transpose(const Mat3& m) {
    return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
}

}  // namespace stamotion

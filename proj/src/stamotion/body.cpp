#include "stamotion/body.hpp"

#include <cmath>

namespace stamotion {

std::array<double, kParamDim> BodyParams::pack() const {
    std::array<double, kParamDim> out{};
    out[0] = trans[0];
    out[1] = trans[1];
    out[2] = trans[2];
    out[3] = root_rot[0];
    out[4] = root_rot[1];
    out[5] = root_rot[2];
    for (int j = 0; j < kNumBodyJoints; ++j)
        for (int a = 0; a < 3; ++a) out[6 + j * 3 + a] = joint_rots[j][a];
    for (int k = 0; k < kShapeDim; ++k) out[75 + k] = shape[k];
    return out;
}

BodyParams BodyParams::unpack(const double* v) {
    BodyParams p;
    p.trans = {v[0], v[1], v[2]};
    p.root_rot = {v[3], v[4], v[5]};
    for (int j = 0; j < kNumBodyJoints; ++j)
        p.joint_rots[j] = {v[6 + j * 3], v[6 + j * 3 + 1], v[6 + j * 3 + 2]};
    for (int k = 0; k < kShapeDim; ++k) p.shape[k] = v[75 + k];
    return p;
}

Mat3 aa_to_rotmat(const Vec3& aa) {
    const double angle = vnorm(aa);
    const double x = aa[0], y = aa[1], z = aa[2];
    // K = skew(aa), R = I + sin(t)/t K + (1-cos t)/t^2 K^2
    if (angle < 1e-8) {
        return {1, -z, y, z, 1, -x, -y, x, 1};
    }
    const double a = std::sin(angle) / angle;
    const double b = (1.0 - std::cos(angle)) / (angle * angle);
    Mat3 r;
    r[0] = 1.0 + b * (-z * z - y * y);
    r[1] = -a * z + b * x * y;
    r[2] = a * y + b * x * z;
    r[3] = a * z + b * x * y;
    r[4] = 1.0 + b * (-z * z - x * x);
    r[5] = -a * x + b * y * z;
    r[6] = -a * y + b * x * z;
    r[7] = a * x + b * y * z;
    r[8] = 1.0 + b * (-y * y - x * x);
    return r;
}

std::array<double, 6> rotmat_to_6d(const Mat3& rm) {
    return {rm[0], rm[3], rm[6], rm[1], rm[4], rm[7]};
}

Mat3 sixd_to_rotmat(const std::array<double, 6>& v) {
    Vec3 a = {v[0], v[1], v[2]};
    Vec3 b = {v[3], v[4], v[5]};
    const double na = vnorm(a);
    if (na < 1e-12) throw NumericError("sixd_to_rotmat: first half is (near) zero");
    Vec3 c1 = vscale(a, 1.0 / na);
    Vec3 w = vsub(b, vscale(c1, vdot(c1, b)));
    const double nw = vnorm(w);
    if (nw < 1e-9 * std::max(1.0, vnorm(b)) || nw < 1e-12)
        throw NumericError("sixd_to_rotmat: halves are collinear or second half is zero");
    Vec3 c2 = vscale(w, 1.0 / nw);
    Vec3 c3 = vcross(c1, c2);
    return {c1[0], c2[0], c3[0], c1[1], c2[1], c3[1], c1[2], c2[2], c3[2]};
}

std::array<double, kPoseDim6d> pack_pose_144(
    const Vec3& root_rot, const std::array<Vec3, kNumBodyJoints>& joint_rots) {
    std::array<double, kPoseDim6d> out{};
    auto put = [&out](int block, const Vec3& aa) {
        const auto sixd = rotmat_to_6d(aa_to_rotmat(aa));
        for (int k = 0; k < 6; ++k) out[block * 6 + k] = sixd[k];
    };
    put(0, root_rot);
    for (int j = 0; j < kNumBodyJoints; ++j) put(j + 1, joint_rots[j]);
    return out;
}

FkResult forward_kinematics_full(const BodyParams& p, const SkeletonTemplate& tmpl) {
    FkResult out;
    std::array<Vec3, kNumJoints> offsets;
    for (int j = 0; j < kNumJoints; ++j) {
        Vec3 o = tmpl.rest_offsets[j];
        for (int a = 0; a < 3; ++a)
            for (int k = 0; k < kShapeDim; ++k) o[a] += tmpl.basis(j, a, k) * p.shape[k];
        offsets[j] = o;
    }
    out.rot[0] = aa_to_rotmat(p.root_rot);
    out.pos[0] = p.trans;
    for (int j = 1; j < kNumJoints; ++j) {
        const int par = tmpl.parent[j];
        const Mat3 local = aa_to_rotmat(p.joint_rots[j - 1]);
        out.rot[j] = mat3_mul(out.rot[par], local);
        out.pos[j] = vadd(out.pos[par], mat3_apply(out.rot[par], offsets[j]));
    }
    return out;
}

std::array<Vec3, kNumJoints> forward_kinematics(const BodyParams& p,
                                                const SkeletonTemplate& tmpl) {
    return forward_kinematics_full(p, tmpl).pos;
}

std::vector<Vec3> skin_vertices(const BodyParams& p, const SkeletonTemplate& tmpl) {
    const FkResult fk = forward_kinematics_full(p, tmpl);
    std::vector<Vec3> out(tmpl.vertex_template.size());
    for (std::size_t v = 0; v < tmpl.vertex_template.size(); ++v) {
        const int j = tmpl.vertex_joint[v];
        out[v] = vadd(fk.pos[j], mat3_apply(fk.rot[j], tmpl.vertex_template[v]));
    }
    return out;
}

std::array<double, 2> project_weak(const WeakPerspCam& cam, const Vec3& point) {
    check_contract(cam.s > 0.0, "project_weak: camera scale must be positive");
    return {cam.s * point[0] + cam.tx, cam.s * point[1] + cam.ty};
}

std::vector<std::array<double, 2>> project_weak(const WeakPerspCam& cam,
                                                const std::vector<Vec3>& points) {
    std::vector<std::array<double, 2>> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = project_weak(cam, points[i]);
    return out;
}

namespace {

// Quantize through float32 so template constants survive the on-disk
// 32-bit sections bit-for-bit.
inline double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

constexpr std::array<int, kNumJoints> kParents = {-1, 0, 0,  0,  1,  2,  3,  4,
                                                  5,  6, 7,  8,  9,  9,  9,  12,
                                                  13, 14, 16, 17, 18, 19, 20, 21};

// Base bone offsets in mm, y-up, roughly a 1.7 m body.
constexpr double kBaseOffsets[kNumJoints][3] = {
    {0, 0, 0},        {90, -60, 0},    {-90, -60, 0},  {0, 110, -10},   {20, -400, 0},
    {-20, -400, 0},   {0, 130, 5},     {-10, -420, -30}, {10, -420, -30}, {0, 60, 10},
    {10, -60, 130},   {-10, -60, 130}, {0, 210, -20},  {80, 120, -10},  {-80, 120, -10},
    {0, 70, 30},      {110, 40, -10},  {-110, 40, -10}, {260, 0, -10},  {-260, 0, -10},
    {250, 0, 0},      {-250, 0, 0},    {80, 0, 0},     {-80, 0, 0}};

}  // namespace

SkeletonTemplate default_template(int vertex_count) {
    SkeletonTemplate t;
    t.parent = kParents;
    Rng rng(0x5741u);  // fixed template seed
    for (int j = 0; j < kNumJoints; ++j) {
        for (int a = 0; a < 3; ++a) {
            double v = kBaseOffsets[j][a];
            if (j > 0) v *= 1.0 + 0.05 * (2.0 * rng.uniform() - 1.0);
            t.rest_offsets[j][a] = f32(v);
        }
    }
    t.shape_basis.assign(static_cast<std::size_t>(kNumJoints) * 3 * kShapeDim, 0.0);
    for (int j = 1; j < kNumJoints; ++j)  // root stays pinned at the translation
        for (int a = 0; a < 3; ++a)
            for (int k = 0; k < kShapeDim; ++k)
                t.shape_basis[(static_cast<std::size_t>(j) * 3 + a) * kShapeDim + k] =
                    f32(rng.normal(0.0, 3.0));
    t.vertex_template.resize(vertex_count);
    t.vertex_joint.resize(vertex_count);
    for (int v = 0; v < vertex_count; ++v) {
        t.vertex_joint[v] = v % kNumJoints;
        for (int a = 0; a < 3; ++a) t.vertex_template[v][a] = f32(rng.normal(0.0, 40.0));
    }
    return t;
}

}  // namespace stamotion

#include "stamotion/metrics.hpp"

#include <cmath>

namespace stamotion {

namespace {

void check_same_layout(const PointSeq& a, const PointSeq& b, const char* what) {
    check_contract(a.size() == b.size(), std::string(what) + ": frame count mismatch");
    for (std::size_t i = 0; i < a.size(); ++i)
        check_contract(a[i].size() == b[i].size(), std::string(what) + ": point count mismatch");
}

double mean_pointwise_distance(const PointFrame& a, const PointFrame& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += vnorm(vsub(a[k], b[k]));
    return acc / static_cast<double>(a.size());
}

}  // namespace

double mpjpe_frame(const PointFrame& pred, const PointFrame& gt) {
    check_contract(pred.size() == gt.size() && !pred.empty(), "mpjpe: point count mismatch");
    return mean_pointwise_distance(pred, gt);
}

double mpjpe(const PointSeq& pred, const PointSeq& gt) {
    check_same_layout(pred, gt, "mpjpe");
    check_contract(!pred.empty(), "mpjpe: empty sequence");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += mean_pointwise_distance(pred[i], gt[i]);
    return acc / static_cast<double>(pred.size());
}

double mpvpe(const PointSeq& pred_vertices, const PointSeq& gt_vertices) {
    return mpjpe(pred_vertices, gt_vertices);
}

void svd3(const Mat3& a, Mat3& u, Vec3& s, Mat3& v) {
    u = a;
    v = mat3_identity();
    // One-sided Jacobi: orthogonalize the columns of u, accumulating the
    // right rotations in v.
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int i = 0; i < 3; ++i) {
                    alpha += u[i * 3 + p] * u[i * 3 + p];
                    beta += u[i * 3 + q] * u[i * 3 + q];
                    gamma += u[i * 3 + p] * u[i * 3 + q];
                }
                off = std::max(off, std::fabs(gamma) / std::max(std::sqrt(alpha * beta), 1e-300));
                if (std::fabs(gamma) < 1e-15 * std::sqrt(alpha * beta)) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;
                for (int i = 0; i < 3; ++i) {
                    const double up = u[i * 3 + p], uq = u[i * 3 + q];
                    u[i * 3 + p] = c * up - sn * uq;
                    u[i * 3 + q] = sn * up + c * uq;
                    const double vp = v[i * 3 + p], vq = v[i * 3 + q];
                    v[i * 3 + p] = c * vp - sn * vq;
                    v[i * 3 + q] = sn * vp + c * vq;
                }
            }
        }
        if (off < 1e-14) break;
    }
    // Column norms are the singular values.
    for (int j = 0; j < 3; ++j) {
        double n = 0.0;
        for (int i = 0; i < 3; ++i) n += u[i * 3 + j] * u[i * 3 + j];
        s[j] = std::sqrt(n);
    }
    // Sort descending, permuting the columns of u and v together.
    int order[3] = {0, 1, 2};
    for (int i = 0; i < 2; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (s[order[j]] > s[order[i]]) std::swap(order[i], order[j]);
    Mat3 us = u, vs = v;
    Vec3 ss = s;
    for (int j = 0; j < 3; ++j) {
        s[j] = ss[order[j]];
        for (int i = 0; i < 3; ++i) {
            u[i * 3 + j] = us[i * 3 + order[j]];
            v[i * 3 + j] = vs[i * 3 + order[j]];
        }
    }
    // Normalize u columns; a vanishing third column is completed by the
    // cross product so u stays orthonormal.
    for (int j = 0; j < 3; ++j) {
        if (s[j] > 1e-150) {
            for (int i = 0; i < 3; ++i) u[i * 3 + j] /= s[j];
        } else if (j == 2) {
            const Vec3 c0 = {u[0], u[3], u[6]};
            const Vec3 c1 = {u[1], u[4], u[7]};
            Vec3 c2 = vcross(c0, c1);
            const double n = vnorm(c2);
            if (n > 1e-150) c2 = vscale(c2, 1.0 / n);
            u[2] = c2[0];
            u[5] = c2[1];
            u[8] = c2[2];
        }
    }
}

SimilarityTransform procrustes_align(const PointFrame& pred, const PointFrame& gt) {
    check_contract(pred.size() == gt.size() && pred.size() >= 3,
                   "procrustes_align: needs >= 3 paired points");
    const double n = static_cast<double>(pred.size());
    Vec3 mu_p{}, mu_g{};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mu_p = vadd(mu_p, pred[i]);
        mu_g = vadd(mu_g, gt[i]);
    }
    mu_p = vscale(mu_p, 1.0 / n);
    mu_g = vscale(mu_g, 1.0 / n);

    Mat3 cov{};  // (1/n) sum (g - mu_g)(p - mu_p)^T
    double var_p = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Vec3 dp = vsub(pred[i], mu_p);
        const Vec3 dg = vsub(gt[i], mu_g);
        var_p += vdot(dp, dp);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cov[r * 3 + c] += dg[r] * dp[c];
    }
    var_p /= n;
    for (double& x : cov) x /= n;

    if (var_p < 1e-12)
        throw NumericError("procrustes_align: coincident source points");

    Mat3 u, v;
    Vec3 sv;
    svd3(cov, u, sv, v);
    if (sv[1] <= 1e-9 * std::max(sv[0], 1e-300))
        throw NumericError("procrustes_align: collinear point set");

    const double det_uv = [&] {
        const Mat3 r = mat3_mul(u, mat3_transpose(v));
        return r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
               r[2] * (r[3] * r[7] - r[4] * r[6]);
    }();
    const double d = det_uv < 0.0 ? -1.0 : 1.0;

    Mat3 ud = u;  // u * diag(1,1,d)
    ud[2] *= d;
    ud[5] *= d;
    ud[8] *= d;

    SimilarityTransform out;
    out.rotation = mat3_mul(ud, mat3_transpose(v));
    out.scale = (sv[0] + sv[1] + d * sv[2]) / var_p;
    out.translation = vsub(mu_g, vscale(mat3_apply(out.rotation, mu_p), out.scale));
    return out;
}

double pa_mpjpe(const PointSeq& pred, const PointSeq& gt) {
    check_same_layout(pred, gt, "pa_mpjpe");
    check_contract(!pred.empty(), "pa_mpjpe: empty sequence");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const SimilarityTransform t = procrustes_align(pred[i], gt[i]);
        PointFrame aligned(pred[i].size());
        for (std::size_t k = 0; k < pred[i].size(); ++k) aligned[k] = t.apply(pred[i][k]);
        acc += mean_pointwise_distance(aligned, gt[i]);
    }
    return acc / static_cast<double>(pred.size());
}

namespace {

Vec3 second_diff(const PointSeq& seq, std::size_t t, std::size_t k) {
    return vadd(vsub(seq[t + 1][k], vscale(seq[t][k], 2.0)), seq[t - 1][k]);
}

}  // namespace

double acc_err(const PointSeq& pred, const PointSeq& gt) {
    check_same_layout(pred, gt, "acc_err");
    if (pred.size() < 3) throw ContractError("acc_err: needs at least 3 frames");
    double acc = 0.0;
    long count = 0;
    for (std::size_t t = 1; t + 1 < pred.size(); ++t) {
        for (std::size_t k = 0; k < pred[t].size(); ++k) {
            acc += vnorm(vsub(second_diff(pred, t, k), second_diff(gt, t, k)));
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

std::vector<AccelCurveRow> accel_curve(const PointSeq& pred, const PointSeq& gt) {
    check_same_layout(pred, gt, "accel_curve");
    if (pred.size() < 3) throw ContractError("accel_curve: needs at least 3 frames");
    std::vector<AccelCurveRow> rows;
    rows.reserve(pred.size() - 2);
    for (std::size_t t = 1; t + 1 < pred.size(); ++t) {
        double gm = 0.0, pm = 0.0;
        const double nk = static_cast<double>(pred[t].size());
        for (std::size_t k = 0; k < pred[t].size(); ++k) {
            gm += vnorm(second_diff(gt, t, k));
            pm += vnorm(second_diff(pred, t, k));
        }
        rows.push_back({static_cast<int>(t), gm / nk, pm / nk});
    }
    return rows;
}

}  // namespace stamotion

#pragma once

// Evaluation metrics: MPJPE, PA-MPJPE (Umeyama similarity alignment),
// MPVPE and acceleration error. Positions in mm; accelerations are unit
// frame-spacing second differences (mm per frame^2).

#include <array>
#include <vector>

#include "stamotion/body.hpp"

namespace stamotion {

using PointFrame = std::vector<Vec3>;       // K points of one frame
using PointSeq = std::vector<PointFrame>;   // N frames

struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = mat3_identity();
    Vec3 translation{};

    Vec3 apply(const Vec3& p) const {
        return vadd(vscale(mat3_apply(rotation, p), scale), translation);
    }
};

double mpjpe(const PointSeq& pred, const PointSeq& gt);
double mpjpe_frame(const PointFrame& pred, const PointFrame& gt);

// Least-squares similarity transform mapping pred onto gt (reflections
// excluded). Throws NumericError for coincident or collinear point sets.
SimilarityTransform procrustes_align(const PointFrame& pred, const PointFrame& gt);

double pa_mpjpe(const PointSeq& pred, const PointSeq& gt);

double mpvpe(const PointSeq& pred_vertices, const PointSeq& gt_vertices);

double acc_err(const PointSeq& pred, const PointSeq& gt);

struct AccelCurveRow {
    int frame;        // interior frame index t
    double gt_mag;    // mean over joints of |a_gt|
    double pred_mag;  // mean over joints of |a_pred|
};
std::vector<AccelCurveRow> accel_curve(const PointSeq& pred, const PointSeq& gt);

// 3x3 SVD via one-sided Jacobi: a = u * diag(s) * v^T with u, v rotations
// up to column signs and s sorted descending.
void svd3(const Mat3& a, Mat3& u, Vec3& s, Mat3& v);

}  // namespace stamotion

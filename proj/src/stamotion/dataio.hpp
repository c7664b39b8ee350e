#pragma once

// Synthetic motion generation, dataset persistence and window sampling.
// Ground truth is band-limited by construction: joint angles are sums of
// seeded sinusoids, the root translation follows a Catmull-Rom spline, and
// the camera is fixed per sequence. Every stored value is quantized to
// float32 before the derived quantities (joints, 2D keypoints) are
// computed from it, so a loaded dataset reproduces its own invariants
// bit-for-bit.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stamotion/body.hpp"
#include "stamotion/windows.hpp"

namespace stamotion {

inline constexpr char kDatasetVersion[] = "sta-motion-data/1";

struct MotionConfig {
    double max_angle = 0.8;       // rad; amplitude budget per angle channel
    double min_period = 8.0;      // frames
    int max_sinusoids = 3;        // per angle channel
    double beta_sigma = 1.0;      // shape coefficients, clipped to +-3
    double trans_amp = 120.0;     // mm; spline control point scale
    int trans_ctrl_spacing = 16;  // frames between spline control points
    double cam_scale = 0.02;      // base weak-perspective scale
    double cam_jitter = 0.15;     // lognormal sigma on the scale
    double cam_trans_sigma = 0.5;

    void validate() const {
        if (min_period < 2.0) throw ConfigError("motion min_period must be >= 2 frames");
        if (max_angle < 0.0) throw ConfigError("motion max_angle must be >= 0");
        if (max_sinusoids < 1) throw ConfigError("motion max_sinusoids must be >= 1");
        if (trans_ctrl_spacing < 1) throw ConfigError("trans_ctrl_spacing must be >= 1");
        if (cam_scale <= 0.0) throw ConfigError("cam_scale must be > 0");
    }
};

using Keypoints2d = std::vector<std::array<double, 2>>;  // 24 per frame

struct MotionSequence {
    int seq_id = 0;
    int length = 0;
    std::vector<BodyParams> params;                // GT Theta per frame
    std::vector<WeakPerspCam> cams;                // GT omega per frame
    std::vector<std::array<Vec3, kNumJoints>> joints;  // J^c per frame
    std::vector<Keypoints2d> keypoints;            // x_hat per frame
    std::uint64_t seed = 0;                        // per-sequence stream seed
};

struct Dataset {
    SkeletonTemplate skeleton;
    int grid = 8;  // feature grid side configured for this data
    std::uint64_t master_seed = 0;
    MotionConfig motion;
    std::vector<MotionSequence> sequences;

    const MotionSequence& sequence_by_id(int seq_id) const;
};

Dataset generate_synthetic(std::uint64_t seed, int n_sequences, int n_frames,
                           const MotionConfig& cfg, int grid = 8);

void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

// Recompute joints/keypoints from Theta and omega and compare bitwise
// against the stored sections. Throws CorruptFileError on mismatch.
void validate_dataset_exactness(const Dataset& data);

enum class WindowMode { Train, Infer };

std::vector<int> sample_windows(const MotionSequence& seq, int window, WindowMode mode,
                                int infer_stride = 0);

}  // namespace stamotion

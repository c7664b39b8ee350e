#pragma once

// Pluggable per-frame input sources. The synthetic provider stands in for
// the pretrained feature encoder and per-frame pose/camera estimator: the
// feature surrogate is a fixed seeded random linear map of the frame's
// ground-truth joint positions onto a GxGx16 grid plus Gaussian noise, and
// initializations are ground truth plus per-component Gaussian noise. The
// precomputed provider loads the same data from a file so real exports can
// be plugged in unchanged.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stamotion/dataio.hpp"

namespace stamotion {

inline constexpr int kFeatureChannels = 16;

struct InitEstimate {
    BodyParams theta_init;
    WeakPerspCam omega_init;
};

struct OcclusionMask {
    std::vector<char> frame_masked;               // length N, or empty = no mask
    std::vector<std::vector<char>> cell_masked;   // optional [frame][G*G]

    bool empty() const { return frame_masked.empty() && cell_masked.empty(); }
    void validate(int n_frames) const {
        if (!frame_masked.empty() && static_cast<int>(frame_masked.size()) != n_frames)
            throw ContractError("occlusion mask length does not match sequence length");
        if (!cell_masked.empty() && static_cast<int>(cell_masked.size()) != n_frames)
            throw ContractError("per-cell mask length does not match sequence length");
    }
};

using FrameFeatures = std::vector<std::vector<double>>;  // N x (G*G*16)

FrameFeatures synth_features(const MotionSequence& seq, std::uint64_t seed, int grid,
                             double noise_sigma, const OcclusionMask& mask = {});

std::vector<InitEstimate> synth_init(const MotionSequence& seq, std::uint64_t seed,
                                     double pose_sigma, double cam_sigma);

struct ProviderConfig {
    std::uint64_t seed = 42;
    double feature_sigma = 0.1;
    double pose_sigma = 0.05;
    double cam_sigma = 0.02;
};

// Common contract: per-sequence features and initializations, computed
// once and cached; consumers treat all providers interchangeably.
class FrameProvider {
  public:
    virtual ~FrameProvider() = default;
    virtual int grid() const = 0;
    int feature_dim() const { return grid() * grid() * kFeatureChannels; }
    virtual const FrameFeatures& features(int seq_index) = 0;
    virtual const std::vector<InitEstimate>& inits(int seq_index) = 0;
};

class SyntheticProvider final : public FrameProvider {
  public:
    SyntheticProvider(const Dataset& data, ProviderConfig cfg);
    int grid() const override { return data_->grid; }
    const FrameFeatures& features(int seq_index) override;
    const std::vector<InitEstimate>& inits(int seq_index) override;

  private:
    const Dataset* data_;
    ProviderConfig cfg_;
    std::vector<FrameFeatures> feature_cache_;
    std::vector<std::vector<InitEstimate>> init_cache_;
    std::vector<char> feature_ready_, init_ready_;
};

// File-backed provider data ("features" and "inits" sections per sequence
// in the dataset container format).
struct PrecomputedData {
    int grid = 0;
    std::vector<FrameFeatures> features;
    std::vector<std::vector<InitEstimate>> inits;
};

void save_precomputed(const std::string& path, const PrecomputedData& data);
PrecomputedData load_precomputed(const std::string& path);

class PrecomputedProvider final : public FrameProvider {
  public:
    explicit PrecomputedProvider(PrecomputedData data) : data_(std::move(data)) {}
    int grid() const override { return data_.grid; }
    const FrameFeatures& features(int seq_index) override { return data_.features.at(seq_index); }
    const std::vector<InitEstimate>& inits(int seq_index) override {
        return data_.inits.at(seq_index);
    }

  private:
    PrecomputedData data_;
};

}  // namespace stamotion

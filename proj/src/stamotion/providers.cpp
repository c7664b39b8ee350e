#include "stamotion/providers.hpp"

#include <cmath>

#include "stamotion/binfile.hpp"

namespace stamotion {

namespace {

// Joint coordinates are fed through a fixed random projection; 300 mm is
// the rough bone-length scale that brings them to order one.
constexpr double kJointScale = 1.0 / 300.0;
constexpr std::uint64_t kProjectionStream = 0xfea7;

std::vector<double> projection_matrix(std::uint64_t seed, int grid) {
    const int out_dim = grid * grid * kFeatureChannels;
    const int in_dim = kNumJoints * 3;
    Rng rng(Rng(seed).fork(kProjectionStream).next_u64());
    std::vector<double> m(static_cast<std::size_t>(out_dim) * in_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& v : m) v = rng.normal(0.0, scale);
    return m;
}

}  // namespace

FrameFeatures synth_features(const MotionSequence& seq, std::uint64_t seed, int grid,
                             double noise_sigma, const OcclusionMask& mask) {
    mask.validate(seq.length);
    const int out_dim = grid * grid * kFeatureChannels;
    const auto proj = projection_matrix(seed, grid);
    Rng noise(Rng(seed).fork(static_cast<std::uint64_t>(seq.seq_id) + 0x100).next_u64());

    FrameFeatures out(seq.length);
    for (int t = 0; t < seq.length; ++t) {
        auto& feat = out[t];
        feat.assign(out_dim, 0.0);
        const bool frame_off = !mask.frame_masked.empty() && mask.frame_masked[t];

        std::array<double, kNumJoints * 3> x;
        for (int j = 0; j < kNumJoints; ++j)
            for (int a = 0; a < 3; ++a) x[j * 3 + a] = seq.joints[t][j][a] * kJointScale;

        for (int o = 0; o < out_dim; ++o) {
            double acc = 0.0;
            const double* row = proj.data() + static_cast<std::size_t>(o) * kNumJoints * 3;
            for (int i = 0; i < kNumJoints * 3; ++i) acc += row[i] * x[i];
            // The noise stream is consumed even for masked frames so masking
            // one frame does not shift every later frame's noise.
            const double n = noise_sigma > 0.0 ? noise.normal(0.0, noise_sigma) : 0.0;
            feat[o] = acc + n;
        }
        if (frame_off) {
            std::fill(feat.begin(), feat.end(), 0.0);
        } else if (!mask.cell_masked.empty() && !mask.cell_masked[t].empty()) {
            const auto& cells = mask.cell_masked[t];
            check_contract(static_cast<int>(cells.size()) == grid * grid,
                           "cell mask size must be G*G");
            for (int cell = 0; cell < grid * grid; ++cell)
                if (cells[cell])
                    for (int ch = 0; ch < kFeatureChannels; ++ch)
                        feat[cell * kFeatureChannels + ch] = 0.0;
        }
    }
    return out;
}

std::vector<InitEstimate> synth_init(const MotionSequence& seq, std::uint64_t seed,
                                     double pose_sigma, double cam_sigma) {
    Rng noise(Rng(seed).fork(static_cast<std::uint64_t>(seq.seq_id) + 0x200).next_u64());
    std::vector<InitEstimate> out(seq.length);
    for (int t = 0; t < seq.length; ++t) {
        auto packed = seq.params[t].pack();
        for (double& v : packed) v += pose_sigma > 0.0 ? noise.normal(0.0, pose_sigma) : 0.0;
        out[t].theta_init = BodyParams::unpack(packed.data());
        WeakPerspCam cam = seq.cams[t];
        if (cam_sigma > 0.0) {
            cam.s += noise.normal(0.0, cam_sigma);
            cam.tx += noise.normal(0.0, cam_sigma);
            cam.ty += noise.normal(0.0, cam_sigma);
        }
        cam.s = std::max(cam.s, kCamScaleFloor + 1e-9);
        out[t].omega_init = cam;
    }
    return out;
}

SyntheticProvider::SyntheticProvider(const Dataset& data, ProviderConfig cfg)
    : data_(&data), cfg_(cfg) {
    const std::size_t n = data.sequences.size();
    feature_cache_.resize(n);
    init_cache_.resize(n);
    feature_ready_.assign(n, 0);
    init_ready_.assign(n, 0);
}

const FrameFeatures& SyntheticProvider::features(int seq_index) {
    auto& slot = feature_cache_.at(seq_index);
    if (!feature_ready_[seq_index]) {
        slot = synth_features(data_->sequences[seq_index], cfg_.seed, data_->grid,
                              cfg_.feature_sigma);
        feature_ready_[seq_index] = 1;
    }
    return slot;
}

const std::vector<InitEstimate>& SyntheticProvider::inits(int seq_index) {
    auto& slot = init_cache_.at(seq_index);
    if (!init_ready_[seq_index]) {
        slot = synth_init(data_->sequences[seq_index], cfg_.seed, cfg_.pose_sigma,
                          cfg_.cam_sigma);
        init_ready_[seq_index] = 1;
    }
    return slot;
}

void save_precomputed(const std::string& path, const PrecomputedData& data) {
    BinContainer c;
    c.version = kDatasetVersion;
    c.meta["kind"] = "providers";
    c.meta["grid"] = data.grid;
    c.meta["n_sequences"] = data.features.size();
    check_contract(data.features.size() == data.inits.size(),
                   "precomputed features/inits sequence counts differ");
    const int feat_dim = data.grid * data.grid * kFeatureChannels;
    for (std::size_t i = 0; i < data.features.size(); ++i) {
        const std::string pre = "seq" + std::to_string(i) + "/";
        const int n = static_cast<int>(data.features[i].size());
        BinSection feats;
        feats.shape = {n, feat_dim};
        for (const auto& f : data.features[i]) {
            check_contract(static_cast<int>(f.size()) == feat_dim,
                           "feature row does not match grid config");
            for (double v : f) feats.data.push_back(static_cast<float>(v));
        }
        c.sections.emplace(pre + "features", std::move(feats));

        BinSection inits;
        inits.shape = {static_cast<int>(data.inits[i].size()), kParamDim + 3};
        for (const auto& e : data.inits[i]) {
            const auto packed = e.theta_init.pack();
            for (double v : packed) inits.data.push_back(static_cast<float>(v));
            const auto cam = e.omega_init.pack();
            for (double v : cam) inits.data.push_back(static_cast<float>(v));
        }
        c.sections.emplace(pre + "inits", std::move(inits));
    }
    write_container(path, c);
}

PrecomputedData load_precomputed(const std::string& path) {
    const BinContainer c = read_container(path, kDatasetVersion);
    PrecomputedData out;
    std::size_t n_seqs = 0;
    try {
        out.grid = c.meta.at("grid").get<int>();
        n_seqs = c.meta.at("n_sequences").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFileError("bad provider header: " + std::string(e.what()));
    }
    const int feat_dim = out.grid * out.grid * kFeatureChannels;
    for (std::size_t i = 0; i < n_seqs; ++i) {
        const std::string pre = "seq" + std::to_string(i) + "/";
        const BinSection& feats = c.section(pre + "features");
        if (feats.shape.size() != 2 || feats.shape[1] != feat_dim)
            throw ShapeMismatchError("features section " + shape_str(feats.shape) +
                                     " does not match header grid " + std::to_string(out.grid));
        const int n = feats.shape[0];
        FrameFeatures ff(n);
        for (int t = 0; t < n; ++t)
            ff[t].assign(feats.data.begin() + static_cast<std::size_t>(t) * feat_dim,
                         feats.data.begin() + static_cast<std::size_t>(t + 1) * feat_dim);
        out.features.push_back(std::move(ff));

        const BinSection& inits = c.section_checked(pre + "inits", {n, kParamDim + 3});
        std::vector<InitEstimate> ie(n);
        for (int t = 0; t < n; ++t) {
            std::array<double, kParamDim> packed;
            const float* row = inits.data.data() + static_cast<std::size_t>(t) * (kParamDim + 3);
            for (int k = 0; k < kParamDim; ++k) packed[k] = row[k];
            ie[t].theta_init = BodyParams::unpack(packed.data());
            ie[t].omega_init = WeakPerspCam{row[kParamDim], row[kParamDim + 1], row[kParamDim + 2]};
        }
        out.inits.push_back(std::move(ie));
    }
    return out;
}

}  // namespace stamotion

#include "stamotion/dataio.hpp"

#include <algorithm>
#include <cmath>

#include "stamotion/binfile.hpp"

namespace stamotion {

namespace {

inline double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// Sum of up to max_sinusoids seeded sinusoids; total amplitude <= max_angle,
// periods >= min_period.
struct AngleTrack {
    std::array<double, 3> amp{};
    std::array<double, 3> omega{};  // angular frequency per frame
    std::array<double, 3> phase{};
    int count = 0;

    double eval(int t) const {
        double v = 0.0;
        for (int i = 0; i < count; ++i) v += amp[i] * std::sin(omega[i] * t + phase[i]);
        return v;
    }
};

AngleTrack sample_track(Rng& rng, const MotionConfig& cfg) {
    AngleTrack tr;
    tr.count = 1 + rng.uniform_int(std::min(cfg.max_sinusoids, 3));
    const double budget = cfg.max_angle / tr.count;
    const double two_pi = 6.283185307179586476925286766559;
    for (int i = 0; i < tr.count; ++i) {
        tr.amp[i] = rng.uniform(0.2, 1.0) * budget;
        const double period = rng.uniform(cfg.min_period, 4.0 * cfg.min_period);
        tr.omega[i] = two_pi / period;
        tr.phase[i] = rng.uniform(0.0, two_pi);
    }
    return tr;
}

// Centripetal-free Catmull-Rom through seeded control points.
struct Spline {
    std::vector<Vec3> ctrl;
    int spacing;

    Vec3 eval(int t) const {
        const double u = static_cast<double>(t) / spacing;
        const int seg = std::min(static_cast<int>(u), static_cast<int>(ctrl.size()) - 2);
        const double x = u - seg;
        auto pt = [&](int i) {
            return ctrl[std::clamp(i, 0, static_cast<int>(ctrl.size()) - 1)];
        };
        const Vec3 p0 = pt(seg - 1), p1 = pt(seg), p2 = pt(seg + 1), p3 = pt(seg + 2);
        Vec3 out;
        for (int a = 0; a < 3; ++a) {
            const double c0 = p1[a];
            const double c1 = 0.5 * (p2[a] - p0[a]);
            const double c2 = p0[a] - 2.5 * p1[a] + 2.0 * p2[a] - 0.5 * p3[a];
            const double c3 = 0.5 * (p3[a] - p0[a]) + 1.5 * (p1[a] - p2[a]);
            out[a] = c0 + x * (c1 + x * (c2 + x * c3));
        }
        return out;
    }
};

MotionSequence generate_sequence(int seq_id, std::uint64_t stream_seed, int n_frames,
                                 const MotionConfig& cfg, const SkeletonTemplate& tmpl) {
    Rng rng(stream_seed);
    MotionSequence seq;
    seq.seq_id = seq_id;
    seq.length = n_frames;
    seq.seed = stream_seed;

    std::array<double, kShapeDim> beta{};
    for (double& b : beta) b = f32(std::clamp(rng.normal(0.0, cfg.beta_sigma), -3.0, 3.0));

    // 72 angle channels: root rotation plus 23 joints, 3 axes each.
    std::vector<AngleTrack> tracks(72);
    for (auto& t : tracks) t = sample_track(rng, cfg);

    Spline spline;
    spline.spacing = cfg.trans_ctrl_spacing;
    const int n_ctrl = n_frames / cfg.trans_ctrl_spacing + 3;
    spline.ctrl.resize(n_ctrl);
    for (auto& c : spline.ctrl)
        for (int a = 0; a < 3; ++a) c[a] = rng.normal(0.0, cfg.trans_amp);

    WeakPerspCam cam;
    cam.s = f32(cfg.cam_scale * std::exp(rng.normal(0.0, cfg.cam_jitter)));
    cam.tx = f32(rng.normal(0.0, cfg.cam_trans_sigma));
    cam.ty = f32(rng.normal(0.0, cfg.cam_trans_sigma));

    seq.params.resize(n_frames);
    seq.cams.assign(n_frames, cam);
    seq.joints.resize(n_frames);
    seq.keypoints.resize(n_frames);
    for (int t = 0; t < n_frames; ++t) {
        BodyParams p;
        p.shape = beta;
        const Vec3 trans = spline.eval(t);
        for (int a = 0; a < 3; ++a) p.trans[a] = f32(trans[a]);
        for (int a = 0; a < 3; ++a) p.root_rot[a] = f32(tracks[a].eval(t));
        for (int j = 0; j < kNumBodyJoints; ++j)
            for (int a = 0; a < 3; ++a)
                p.joint_rots[j][a] = f32(tracks[3 + j * 3 + a].eval(t));
        seq.params[t] = p;

        // Derived quantities are computed from the quantized parameters and
        // quantized themselves, making the stored record self-consistent.
        const auto joints = forward_kinematics(p, tmpl);
        for (int j = 0; j < kNumJoints; ++j)
            for (int a = 0; a < 3; ++a) seq.joints[t][j][a] = f32(joints[j][a]);
        seq.keypoints[t].resize(kNumJoints);
        for (int j = 0; j < kNumJoints; ++j) {
            const auto uv = project_weak(cam, seq.joints[t][j]);
            seq.keypoints[t][j] = {f32(uv[0]), f32(uv[1])};
        }
    }
    return seq;
}

}  // namespace

const MotionSequence& Dataset::sequence_by_id(int seq_id) const {
    for (const auto& s : sequences)
        if (s.seq_id == seq_id) return s;
    throw DataError("unknown sequence id " + std::to_string(seq_id));
}

Dataset generate_synthetic(std::uint64_t seed, int n_sequences, int n_frames,
                           const MotionConfig& cfg, int grid) {
    cfg.validate();
    if (n_sequences < 1) throw ConfigError("need at least one sequence");
    Dataset data;
    data.skeleton = default_template();
    data.grid = grid;
    data.master_seed = seed;
    data.motion = cfg;
    data.sequences.resize(n_sequences);
    Rng root(seed);
    for (int i = 0; i < n_sequences; ++i) {
        const std::uint64_t stream = root.fork(static_cast<std::uint64_t>(i) + 1).next_u64();
        data.sequences[i] = generate_sequence(i, stream, n_frames, cfg, data.skeleton);
    }
    return data;
}

namespace {

std::string seq_prefix(int i) { return "seq" + std::to_string(i) + "/"; }

nlohmann::json motion_to_json(const MotionConfig& m) {
    return {{"max_angle", m.max_angle},
            {"min_period", m.min_period},
            {"max_sinusoids", m.max_sinusoids},
            {"beta_sigma", m.beta_sigma},
            {"trans_amp", m.trans_amp},
            {"trans_ctrl_spacing", m.trans_ctrl_spacing},
            {"cam_scale", m.cam_scale},
            {"cam_jitter", m.cam_jitter},
            {"cam_trans_sigma", m.cam_trans_sigma}};
}

MotionConfig motion_from_json(const nlohmann::json& j) {
    MotionConfig m;
    m.max_angle = j.at("max_angle").get<double>();
    m.min_period = j.at("min_period").get<double>();
    m.max_sinusoids = j.at("max_sinusoids").get<int>();
    m.beta_sigma = j.at("beta_sigma").get<double>();
    m.trans_amp = j.at("trans_amp").get<double>();
    m.trans_ctrl_spacing = j.at("trans_ctrl_spacing").get<int>();
    m.cam_scale = j.at("cam_scale").get<double>();
    m.cam_jitter = j.at("cam_jitter").get<double>();
    m.cam_trans_sigma = j.at("cam_trans_sigma").get<double>();
    return m;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& data) {
    BinContainer c;
    c.version = kDatasetVersion;
    c.meta["grid"] = data.grid;
    c.meta["master_seed"] = data.master_seed;
    c.meta["motion"] = motion_to_json(data.motion);
    c.meta["parents"] = data.skeleton.parent;
    c.meta["vertex_joint"] = data.skeleton.vertex_joint;

    auto put = [&c](const std::string& name, std::vector<int> shape,
                    const std::vector<double>& vals) {
        BinSection s;
        s.shape = std::move(shape);
        s.data.reserve(vals.size());
        for (double v : vals) s.data.push_back(static_cast<float>(v));
        c.sections.emplace(name, std::move(s));
    };

    {
        std::vector<double> rest;
        for (const auto& o : data.skeleton.rest_offsets) rest.insert(rest.end(), o.begin(), o.end());
        put("template/rest_offsets", {kNumJoints, 3}, rest);
        put("template/shape_basis", {kNumJoints, 3, kShapeDim}, data.skeleton.shape_basis);
        std::vector<double> verts;
        for (const auto& v : data.skeleton.vertex_template)
            verts.insert(verts.end(), v.begin(), v.end());
        put("template/vertices", {data.skeleton.vertex_count(), 3}, verts);
    }

    nlohmann::json seq_meta = nlohmann::json::array();
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
        const MotionSequence& s = data.sequences[i];
        seq_meta.push_back({{"seq_id", s.seq_id}, {"length", s.length}, {"seed", s.seed}});
        const std::string pre = seq_prefix(static_cast<int>(i));
        std::vector<double> theta, omega, joints, kp;
        for (int t = 0; t < s.length; ++t) {
            const auto packed = s.params[t].pack();
            theta.insert(theta.end(), packed.begin(), packed.end());
            const auto cam = s.cams[t].pack();
            omega.insert(omega.end(), cam.begin(), cam.end());
            for (int j = 0; j < kNumJoints; ++j)
                joints.insert(joints.end(), s.joints[t][j].begin(), s.joints[t][j].end());
            for (int j = 0; j < kNumJoints; ++j)
                kp.insert(kp.end(), s.keypoints[t][j].begin(), s.keypoints[t][j].end());
        }
        put(pre + "theta", {s.length, kParamDim}, theta);
        put(pre + "omega", {s.length, 3}, omega);
        put(pre + "joints", {s.length, kNumJoints, 3}, joints);
        put(pre + "kp2d", {s.length, kNumJoints, 2}, kp);
    }
    c.meta["sequences"] = seq_meta;
    write_container(path, c);
}

Dataset load_dataset(const std::string& path) {
    const BinContainer c = read_container(path, kDatasetVersion);
    Dataset data;
    try {
        data.grid = c.meta.at("grid").get<int>();
        data.master_seed = c.meta.at("master_seed").get<std::uint64_t>();
        data.motion = motion_from_json(c.meta.at("motion"));
        const auto parents = c.meta.at("parents").get<std::vector<int>>();
        if (parents.size() != kNumJoints) throw CorruptFileError("bad parents array");
        std::copy(parents.begin(), parents.end(), data.skeleton.parent.begin());
        data.skeleton.vertex_joint = c.meta.at("vertex_joint").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFileError("bad dataset header: " + std::string(e.what()));
    }

    const auto& rest = c.section_checked("template/rest_offsets", {kNumJoints, 3});
    for (int j = 0; j < kNumJoints; ++j)
        for (int a = 0; a < 3; ++a) data.skeleton.rest_offsets[j][a] = rest.data[j * 3 + a];
    const auto& basis = c.section_checked("template/shape_basis", {kNumJoints, 3, kShapeDim});
    data.skeleton.shape_basis.assign(basis.data.begin(), basis.data.end());
    const int n_verts = static_cast<int>(data.skeleton.vertex_joint.size());
    const auto& verts = c.section_checked("template/vertices", {n_verts, 3});
    data.skeleton.vertex_template.resize(n_verts);
    for (int v = 0; v < n_verts; ++v)
        for (int a = 0; a < 3; ++a) data.skeleton.vertex_template[v][a] = verts.data[v * 3 + a];

    nlohmann::json seq_meta;
    try {
        seq_meta = c.meta.at("sequences");
    } catch (const nlohmann::json::exception&) {
        throw CorruptFileError("dataset header lacks sequence list");
    }
    for (std::size_t i = 0; i < seq_meta.size(); ++i) {
        MotionSequence s;
        try {
            s.seq_id = seq_meta[i].at("seq_id").get<int>();
            s.length = seq_meta[i].at("length").get<int>();
            s.seed = seq_meta[i].at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw CorruptFileError("bad sequence header: " + std::string(e.what()));
        }
        const std::string pre = seq_prefix(static_cast<int>(i));
        const auto& theta = c.section_checked(pre + "theta", {s.length, kParamDim});
        const auto& omega = c.section_checked(pre + "omega", {s.length, 3});
        const auto& joints = c.section_checked(pre + "joints", {s.length, kNumJoints, 3});
        const auto& kp = c.section_checked(pre + "kp2d", {s.length, kNumJoints, 2});
        s.params.resize(s.length);
        s.cams.resize(s.length);
        s.joints.resize(s.length);
        s.keypoints.resize(s.length);
        for (int t = 0; t < s.length; ++t) {
            std::array<double, kParamDim> packed;
            for (int k = 0; k < kParamDim; ++k)
                packed[k] = theta.data[static_cast<std::size_t>(t) * kParamDim + k];
            s.params[t] = BodyParams::unpack(packed.data());
            s.cams[t] = WeakPerspCam{omega.data[t * 3], omega.data[t * 3 + 1], omega.data[t * 3 + 2]};
            for (int j = 0; j < kNumJoints; ++j)
                for (int a = 0; a < 3; ++a)
                    s.joints[t][j][a] =
                        joints.data[(static_cast<std::size_t>(t) * kNumJoints + j) * 3 + a];
            s.keypoints[t].resize(kNumJoints);
            for (int j = 0; j < kNumJoints; ++j)
                for (int a = 0; a < 2; ++a)
                    s.keypoints[t][j][a] =
                        kp.data[(static_cast<std::size_t>(t) * kNumJoints + j) * 2 + a];
        }
        data.sequences.push_back(std::move(s));
    }
    return data;
}

void validate_dataset_exactness(const Dataset& data) {
    for (const auto& s : data.sequences) {
        for (int t = 0; t < s.length; ++t) {
            const auto joints = forward_kinematics(s.params[t], data.skeleton);
            for (int j = 0; j < kNumJoints; ++j)
                for (int a = 0; a < 3; ++a)
                    if (static_cast<float>(joints[j][a]) !=
                        static_cast<float>(s.joints[t][j][a]))
                        throw CorruptFileError("sequence " + std::to_string(s.seq_id) +
                                               ": stored joints do not match FK of Theta");
            for (int j = 0; j < kNumJoints; ++j) {
                const auto uv = project_weak(s.cams[t], s.joints[t][j]);
                if (static_cast<float>(uv[0]) != static_cast<float>(s.keypoints[t][j][0]) ||
                    static_cast<float>(uv[1]) != static_cast<float>(s.keypoints[t][j][1]))
                    throw CorruptFileError("sequence " + std::to_string(s.seq_id) +
                                           ": stored keypoints do not match projection");
            }
        }
    }
}

std::vector<int> sample_windows(const MotionSequence& seq, int window, WindowMode mode,
                                int infer_stride) {
    if (mode == WindowMode::Train) return window_starts_train(seq.length, window);
    const int stride = infer_stride > 0 ? infer_stride : std::max(1, window - 2);
    return window_starts_infer(seq.length, window, stride);
}

}  // namespace stamotion

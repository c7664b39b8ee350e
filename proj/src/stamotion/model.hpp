#pragma once

// The trainable network: window embeddings (Gamma1-Gamma3), the
// spatio-temporal aggregation block (three self-similarity maps + two
// attention maps fused by Phi6, value path Phi5/Phi7, residual add), the
// iterative error-feedback parameter head, and the residual-refinement
// LSTM. Templated on the scalar type: float for training, double for
// finite-difference verification.
//
// Fusion channel order (ablated entries removed, not zero-filled):
//   nssm_H, nssm_pose, nssm_cam, am_H, am_cam[, am_pose]

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stamotion/body.hpp"
#include "stamotion/graph.hpp"

namespace stamotion {

struct AblationFlags {
    bool no_body_aware_features = false;  // drop nssm_H and am_H from fusion
    bool no_pose_init = false;            // drop nssm_pose (and Gamma1)
    bool no_cam_init = false;             // drop nssm_cam, am_cam (and Gamma2)
    bool no_lstm = false;                 // prediction = coarse estimate
    bool am_on_pose = false;              // add attention over pose embeddings
    bool lstm_on_features = false;        // LSTM aggregates Z before one head pass
};

enum class NssmVariant { Cosine, MinMax };

struct ModelConfig {
    int window = 16;
    int grid = 8;
    int feature_dim = 2048;  // f_H width
    int uplift_dim = 512;    // Gamma1/Gamma2 output
    int attn_dim = 1024;     // attention projections and Phi5
    int head_hidden = 1024;
    int head_layers = 2;      // hidden layers in the correction stack
    int head_iterations = 3;  // error-feedback iterations
    int lstm_layers = 3;
    int lstm_hidden = 2048;
    bool attention_scale = true;  // 1/sqrt(attn_dim) logits scaling
    NssmVariant nssm_variant = NssmVariant::Cosine;
    bool fused_row_softmax = false;
    AblationFlags ablation;
    std::array<double, 3> mean_cam = {0.02, 0.0, 0.0};

    int pooled_side() const { return grid <= 8 ? grid : 8; }
    int input_feature_dim() const { return pooled_side() * pooled_side() * 16; }

    int active_map_count() const {
        int n = 0;
        if (!ablation.no_body_aware_features) n += 2;  // nssm_H + am_H
        if (!ablation.no_pose_init) n += 1 + (ablation.am_on_pose ? 1 : 0);
        if (!ablation.no_cam_init) n += 2;  // nssm_cam + am_cam
        return n;
    }

    void validate() const {
        if (window < 1) throw ConfigError("window must be >= 1");
        if (grid < 1) throw ConfigError("grid must be >= 1");
        if (ablation.am_on_pose && ablation.no_pose_init)
            throw ConfigError("am_on_pose requires pose initialization");
        if (ablation.no_lstm && ablation.lstm_on_features)
            throw ConfigError("no_lstm and lstm_on_features are mutually exclusive");
        if (active_map_count() == 0)
            throw ConfigError("all similarity/attention maps ablated; nothing to fuse");
    }
};

// Block-average pooling of a raw GxGx16 grid down to the model's input
// vector (identity flatten for G <= 8).
template <typename T>
std::vector<T> pool_grid_features(const std::vector<double>& grid_data, int grid) {
    const int side = grid <= 8 ? grid : 8;
    const int block = (grid + side - 1) / side;
    std::vector<T> out(static_cast<std::size_t>(side) * side * 16);
    if (grid <= 8) {
        for (std::size_t i = 0; i < grid_data.size(); ++i) out[i] = static_cast<T>(grid_data[i]);
        return out;
    }
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            for (int ch = 0; ch < 16; ++ch) {
                double acc = 0.0;
                int count = 0;
                for (int rr = r * block; rr < std::min((r + 1) * block, grid); ++rr)
                    for (int cc = c * block; cc < std::min((c + 1) * block, grid); ++cc) {
                        acc += grid_data[(static_cast<std::size_t>(rr) * grid + cc) * 16 + ch];
                        ++count;
                    }
                out[(static_cast<std::size_t>(r) * side + c) * 16 + ch] =
                    static_cast<T>(acc / count);
            }
        }
    }
    return out;
}

template <typename T>
struct WindowInputsT {
    TensorT<T> features;  // W x input_feature_dim (pooled)
    TensorT<T> pose144;   // W x 144
    TensorT<T> omega;     // W x 3
};

template <typename T>
class ModelT {
  public:
    using Ref = typename GraphT<T>::Ref;

    explicit ModelT(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        create_parameters();
    }

    const ModelConfig& config() const { return cfg_; }

    std::vector<ParameterT<T>*> parameters() {
        std::vector<ParameterT<T>*> out;
        out.reserve(params_.size());
        for (auto& p : params_) out.push_back(p.get());
        return out;
    }

    ParameterT<T>& at(const std::string& name) {
        auto it = index_.find(name);
        check_contract(it != index_.end(), "unknown parameter '" + name + "'");
        return *params_[it->second];
    }
    const ParameterT<T>& at(const std::string& name) const {
        auto it = index_.find(name);
        check_contract(it != index_.end(), "unknown parameter '" + name + "'");
        return *params_[it->second];
    }
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    // Fan-based uniform init, zero biases; the LSTM output projection is
    // zero so refinement starts at the coarse solution.
    void init_parameters(std::uint64_t seed) {
        Rng rng(seed);
        for (auto& p : params_) {
            const bool is_bias = p->value.rows() == 1 && p->name.size() > 2 &&
                                 p->name.substr(p->name.size() - 2) == ".b";
            const bool zero_init = is_bias || p->name.rfind("lstm.proj", 0) == 0;
            if (zero_init) {
                std::fill(p->value.data.begin(), p->value.data.end(), T(0));
            } else {
                const double fan_in = p->value.rows();
                const double fan_out = p->value.cols();
                const double bound = std::sqrt(6.0 / (fan_in + fan_out));
                for (T& v : p->value.data)
                    v = static_cast<T>(rng.uniform(-bound, bound));
            }
            p->zero_grad();
        }
    }

    struct WindowForward {
        Ref f_pose = -1, f_cam = -1, f_H = -1;
        Ref nssm_H = -1, nssm_pose = -1, nssm_cam = -1;
        Ref am_H = -1, am_cam = -1, am_pose = -1;
        Ref fused = -1;
        Ref Y = -1, Z = -1;
        Ref theta_coarse = -1;
        Ref omega_pred = -1;
        Ref theta_pred = -1;

        // Active fusion inputs in channel order, for inspection/dumps.
        std::vector<std::pair<std::string, Ref>> map_stack;
    };

    WindowForward build_window(GraphT<T>& g, const WindowInputsT<T>& in) {
        const int w = cfg_.window;
        check_contract(in.features.ndim() == 2 && in.features.rows() == w &&
                           in.features.cols() == cfg_.input_feature_dim(),
                       "window features must be [W x " +
                           std::to_string(cfg_.input_feature_dim()) + "]");
        check_contract(in.pose144.ndim() == 2 && in.pose144.rows() == w &&
                           in.pose144.cols() == kPoseDim6d,
                       "window pose must be [W x 144]");
        check_contract(in.omega.ndim() == 2 && in.omega.rows() == w && in.omega.cols() == 3,
                       "window camera must be [W x 3]");

        WindowForward out;
        const Ref feat = g.constant(in.features);
        const Ref pose = g.constant(in.pose144);
        const Ref omega = g.constant(in.omega);

        out.f_H = affine(g, feat, "sta.gamma3");
        if (!cfg_.ablation.no_pose_init) out.f_pose = affine(g, pose, "sta.gamma1");
        if (!cfg_.ablation.no_cam_init) out.f_cam = affine(g, omega, "sta.gamma2");

        if (!cfg_.ablation.no_body_aware_features) {
            out.nssm_H = nssm(g, out.f_H);
            out.am_H = attention(g, out.f_H, "sta.phi3", "sta.phi4");
        }
        if (!cfg_.ablation.no_pose_init) {
            out.nssm_pose = nssm(g, out.f_pose);
            if (cfg_.ablation.am_on_pose)
                out.am_pose = attention(g, out.f_pose, "sta.phi_pose_a", "sta.phi_pose_b");
        }
        if (!cfg_.ablation.no_cam_init) {
            out.nssm_cam = nssm(g, out.f_cam);
            out.am_cam = attention(g, out.f_cam, "sta.phi1", "sta.phi2");
        }

        out.map_stack = active_maps(out);
        out.fused = fuse(g, out.map_stack);
        const Ref values = affine(g, out.f_H, "sta.phi5");
        out.Y = affine(g, g.matmul(out.fused, values), "sta.phi7");
        out.Z = g.add(out.f_H, out.Y);

        Ref head_input = out.Z;
        if (cfg_.ablation.lstm_on_features)
            head_input = lstm_feature_aggregate(g, out.Z);

        auto [theta_c, omega_c] = coarse_head(g, head_input);
        out.theta_coarse = theta_c;
        out.omega_pred = omega_c;

        if (cfg_.ablation.no_lstm || cfg_.ablation.lstm_on_features) {
            out.theta_pred = out.theta_coarse;
        } else {
            const Ref residual = lstm_residual(g, out.Z, out.theta_coarse);
            out.theta_pred = g.add(out.theta_coarse, residual);
        }
        return out;
    }

  private:
    ModelConfig cfg_;
    std::vector<std::unique_ptr<ParameterT<T>>> params_;
    std::map<std::string, std::size_t> index_;

    void add_param(const std::string& name, int rows, int cols) {
        params_.push_back(
            std::make_unique<ParameterT<T>>(name, TensorT<T>::zeros({rows, cols})));
        index_[name] = params_.size() - 1;
    }

    void add_affine(const std::string& stem, int in, int out) {
        add_param(stem + ".w", in, out);
        add_param(stem + ".b", 1, out);
    }

    void create_parameters() {
        const int f = cfg_.feature_dim, u = cfg_.uplift_dim, a = cfg_.attn_dim;
        add_affine("sta.gamma3", cfg_.input_feature_dim(), f);
        if (!cfg_.ablation.no_pose_init) add_affine("sta.gamma1", kPoseDim6d, u);
        if (!cfg_.ablation.no_cam_init) add_affine("sta.gamma2", 3, u);
        if (!cfg_.ablation.no_body_aware_features) {
            add_affine("sta.phi3", f, a);
            add_affine("sta.phi4", f, a);
        }
        if (!cfg_.ablation.no_cam_init) {
            add_affine("sta.phi1", u, a);
            add_affine("sta.phi2", u, a);
        }
        if (cfg_.ablation.am_on_pose) {
            add_affine("sta.phi_pose_a", u, a);
            add_affine("sta.phi_pose_b", u, a);
        }
        add_affine("sta.phi5", f, a);
        add_param("sta.phi6.w", 1, cfg_.active_map_count());
        add_param("sta.phi6.b", 1, 1);
        add_affine("sta.phi7", a, f);

        int head_in = f + kParamDim + 3;
        for (int l = 0; l < cfg_.head_layers; ++l) {
            add_affine("head.fc" + std::to_string(l), head_in, cfg_.head_hidden);
            head_in = cfg_.head_hidden;
        }
        add_affine("head.out", head_in, kParamDim + 3);

        if (!cfg_.ablation.no_lstm && !cfg_.ablation.lstm_on_features) {
            int in = f + kParamDim;
            for (int l = 0; l < cfg_.lstm_layers; ++l) {
                const std::string stem = "lstm.l" + std::to_string(l);
                add_param(stem + ".w_ih", in, 4 * cfg_.lstm_hidden);
                add_param(stem + ".w_hh", cfg_.lstm_hidden, 4 * cfg_.lstm_hidden);
                add_param(stem + ".b", 1, 4 * cfg_.lstm_hidden);
                in = cfg_.lstm_hidden;
            }
            add_affine("lstm.proj", cfg_.lstm_hidden, kParamDim);
        }
        if (cfg_.ablation.lstm_on_features) {
            int in = f;
            for (int l = 0; l < cfg_.lstm_layers; ++l) {
                const std::string stem = "lstmf.l" + std::to_string(l);
                add_param(stem + ".w_ih", in, 4 * cfg_.lstm_hidden);
                add_param(stem + ".w_hh", cfg_.lstm_hidden, 4 * cfg_.lstm_hidden);
                add_param(stem + ".b", 1, 4 * cfg_.lstm_hidden);
                in = cfg_.lstm_hidden;
            }
            add_affine("lstmf.proj", cfg_.lstm_hidden, f);
        }
    }

    Ref affine(GraphT<T>& g, Ref x, const std::string& stem) {
        return g.linear(x, g.param(at(stem + ".w")), g.param(at(stem + ".b")));
    }

    // S_ij = (cos(x_i, x_j) + 1)/2 with cos against a zero row defined 0;
    // the min-max variant rescales raw inner products to [0,1] per matrix.
    Ref nssm(GraphT<T>& g, Ref x) {
        if (cfg_.nssm_variant == NssmVariant::Cosine) {
            const Ref rn = g.row_normalize(x);
            return g.scale(g.add_const(g.matmul_nt(rn, rn), T(1)), T(0.5));
        }
        const Ref raw = g.matmul_nt(x, x);
        const Ref mn = g.min_all(raw);
        const Ref mx = g.max_all(raw);
        const Ref range = g.add_const(g.sub(mx, mn), T(1e-12));
        const Ref shifted = g.add_scalar_node(raw, g.scale(mn, T(-1)));
        return g.scale_by(shifted, g.recip(range));
    }

    Ref attention(GraphT<T>& g, Ref x, const std::string& stem_q,
                  const std::string& stem_k) {
        const Ref q = affine(g, x, stem_q);
        const Ref k = affine(g, x, stem_k);
        Ref logits = g.matmul_nt(q, k);
        if (cfg_.attention_scale)
            logits = g.scale(logits, T(1) / static_cast<T>(std::sqrt((double)cfg_.attn_dim)));
        return g.softmax_rows(logits);
    }

    std::vector<std::pair<std::string, Ref>> active_maps(const WindowForward& f) const {
        std::vector<std::pair<std::string, Ref>> maps;
        if (f.nssm_H >= 0) maps.emplace_back("nssm_H", f.nssm_H);
        if (f.nssm_pose >= 0) maps.emplace_back("nssm_pose", f.nssm_pose);
        if (f.nssm_cam >= 0) maps.emplace_back("nssm_cam", f.nssm_cam);
        if (f.am_H >= 0) maps.emplace_back("am_H", f.am_H);
        if (f.am_cam >= 0) maps.emplace_back("am_cam", f.am_cam);
        if (f.am_pose >= 0) maps.emplace_back("am_pose", f.am_pose);
        return maps;
    }

    Ref fuse(GraphT<T>& g, const std::vector<std::pair<std::string, Ref>>& maps) {
        check_contract(static_cast<int>(maps.size()) == cfg_.active_map_count(),
                       "fusion stack does not match configuration");
        const Ref w6 = g.param(at("sta.phi6.w"));
        const Ref b6 = g.param(at("sta.phi6.b"));
        Ref fused = -1;
        for (std::size_t k = 0; k < maps.size(); ++k) {
            const Ref term = g.scale_by(maps[k].second,
                                        g.slice_cols(w6, static_cast<int>(k),
                                                     static_cast<int>(k) + 1));
            fused = (fused < 0) ? term : g.add(fused, term);
        }
        fused = g.add_scalar_node(fused, b6);
        if (cfg_.fused_row_softmax) fused = g.softmax_rows(fused);
        return fused;
    }

    std::pair<Ref, Ref> coarse_head(GraphT<T>& g, Ref z) {
        const int w = cfg_.window;
        TensorT<T> theta0({w, kParamDim});  // mean parameters: rest pose
        TensorT<T> omega0({w, 3});
        for (int r = 0; r < w; ++r)
            for (int c = 0; c < 3; ++c) omega0.at(r, c) = static_cast<T>(cfg_.mean_cam[c]);
        Ref theta = g.constant(std::move(theta0));
        Ref omega = g.constant(std::move(omega0));
        for (int it = 0; it < cfg_.head_iterations; ++it) {
            Ref h = g.concat_cols({z, theta, omega});
            for (int l = 0; l < cfg_.head_layers; ++l)
                h = g.tanh_(affine(g, h, "head.fc" + std::to_string(l)));
            const Ref corr = affine(g, h, "head.out");
            theta = g.add(theta, g.slice_cols(corr, 0, kParamDim));
            omega = g.add(omega, g.slice_cols(corr, kParamDim, kParamDim + 3));
        }
        const Ref s = g.clamp_min(g.slice_cols(omega, 0, 1), T(kCamScaleFloor));
        omega = g.concat_cols({s, g.slice_cols(omega, 1, 3)});
        return {theta, omega};
    }

    // One pass over the window through the stacked cells; returns the
    // top-layer hidden states stacked to [W x hidden]. Gate order i,f,g,o.
    Ref lstm_stack(GraphT<T>& g, const std::vector<Ref>& xs, const std::string& prefix) {
        const int hid = cfg_.lstm_hidden;
        std::vector<Ref> h(cfg_.lstm_layers), c(cfg_.lstm_layers);
        for (int l = 0; l < cfg_.lstm_layers; ++l) {
            h[l] = g.constant(TensorT<T>({1, hid}));
            c[l] = g.constant(TensorT<T>({1, hid}));
        }
        std::vector<Ref> w_ih(cfg_.lstm_layers), w_hh(cfg_.lstm_layers), b(cfg_.lstm_layers);
        for (int l = 0; l < cfg_.lstm_layers; ++l) {
            const std::string stem = prefix + ".l" + std::to_string(l);
            w_ih[l] = g.param(at(stem + ".w_ih"));
            w_hh[l] = g.param(at(stem + ".w_hh"));
            b[l] = g.param(at(stem + ".b"));
        }
        std::vector<Ref> tops;
        tops.reserve(xs.size());
        for (Ref x : xs) {
            Ref inp = x;
            for (int l = 0; l < cfg_.lstm_layers; ++l) {
                const Ref gates =
                    g.add(g.add(g.matmul(inp, w_ih[l]), g.matmul(h[l], w_hh[l])), b[l]);
                const Ref gi = g.sigmoid(g.slice_cols(gates, 0, hid));
                const Ref gf = g.sigmoid(g.slice_cols(gates, hid, 2 * hid));
                const Ref gg = g.tanh_(g.slice_cols(gates, 2 * hid, 3 * hid));
                const Ref go = g.sigmoid(g.slice_cols(gates, 3 * hid, 4 * hid));
                c[l] = g.add(g.mul(gf, c[l]), g.mul(gi, gg));
                h[l] = g.mul(go, g.tanh_(c[l]));
                inp = h[l];
            }
            tops.push_back(h[cfg_.lstm_layers - 1]);
        }
        return g.concat_rows(tops);
    }

    Ref lstm_residual(GraphT<T>& g, Ref z, Ref theta_coarse) {
        check_contract(cfg_.window >= 1, "refine_residual: empty window");
        std::vector<Ref> xs;
        xs.reserve(cfg_.window);
        for (int t = 0; t < cfg_.window; ++t)
            xs.push_back(g.concat_cols(
                {g.slice_rows(z, t, t + 1), g.slice_rows(theta_coarse, t, t + 1)}));
        return affine(g, lstm_stack(g, xs, "lstm"), "lstm.proj");
    }

    Ref lstm_feature_aggregate(GraphT<T>& g, Ref z) {
        std::vector<Ref> xs;
        xs.reserve(cfg_.window);
        for (int t = 0; t < cfg_.window; ++t) xs.push_back(g.slice_rows(z, t, t + 1));
        return affine(g, lstm_stack(g, xs, "lstmf"), "lstmf.proj");
    }

};

using Model32 = ModelT<float>;
using Model64 = ModelT<double>;

}  // namespace stamotion

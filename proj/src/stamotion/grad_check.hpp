#pragma once

// Finite-difference verification of reverse-mode gradients, run in 64-bit.
// The builder callback reconstructs the scalar loss graph from the current
// parameter values, so central differences see exactly the perturbed model.

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "stamotion/common.hpp"
#include "stamotion/graph.hpp"

namespace stamotion {

struct GradCheckOptions {
    double step = 1e-5;  // central-difference half step
    // Cap on probed entries per parameter (0 = all). Large models are
    // spot-checked on a seeded sample; every parameter is always probed.
    int max_entries_per_param = 0;
    std::uint64_t seed = 1234;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    long worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    long entries_checked = 0;
};

// Builder signature: given a fresh graph, return the scalar loss node.
// Parameters must be consumed through GraphT::param() of the same objects
// passed in `params`.
using LossBuilder64 = std::function<GraphT<double>::Ref(GraphT<double>&)>;

inline double eval_loss(const LossBuilder64& build) {
    GraphT<double> g;
    auto root = build(g);
    return g.val(root).data[0];
}

inline GradCheckReport grad_check(std::vector<ParameterT<double>*> params,
                                  const LossBuilder64& build,
                                  const GradCheckOptions& opts = {}) {
    for (auto* p : params) p->zero_grad();
    {
        GraphT<double> g;
        auto root = build(g);
        g.backward(root);
    }

    GradCheckReport report;
    Rng rng(opts.seed);
    for (auto* p : params) {
        const long n = p->value.numel();
        std::vector<long> idx;
        if (opts.max_entries_per_param <= 0 || n <= opts.max_entries_per_param) {
            idx.resize(n);
            for (long k = 0; k < n; ++k) idx[k] = k;
        } else {
            for (int k = 0; k < opts.max_entries_per_param; ++k)
                idx.push_back(rng.uniform_int(static_cast<int>(n)));
            std::sort(idx.begin(), idx.end());
            idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        }
        for (long k : idx) {
            const double saved = p->value.data[k];
            p->value.data[k] = saved + opts.step;
            const double up = eval_loss(build);
            p->value.data[k] = saved - opts.step;
            const double down = eval_loss(build);
            p->value.data[k] = saved;

            const double numeric = (up - down) / (2.0 * opts.step);
            const double analytic = p->grad.data[k];
            const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
            const double rel = std::fabs(numeric - analytic) / denom;
            report.entries_checked += 1;
            if (rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_parameter = p->name;
                report.worst_index = k;
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace stamotion

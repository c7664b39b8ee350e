#pragma once

#include <vector>

#include "stamotion/common.hpp"

namespace stamotion {

// Non-overlapping contiguous training windows; remainder tail dropped.
inline std::vector<int> window_starts_train(int n_frames, int window) {
    check_contract(window >= 1, "window must be >= 1");
    if (n_frames < window)
        throw ContractError("sequence of " + std::to_string(n_frames) +
                            " frames is shorter than window " + std::to_string(window));
    std::vector<int> starts;
    for (int s = 0; s + window <= n_frames; s += window) starts.push_back(s);
    return starts;
}

// Stride-S inference windows, tail-aligned so the last window ends at the
// final frame; every frame is covered by at least one window.
inline std::vector<int> window_starts_infer(int n_frames, int window, int stride) {
    check_contract(stride >= 1 && stride <= window, "stride must be in [1, window]");
    if (n_frames < window)
        throw ContractError("sequence of " + std::to_string(n_frames) +
                            " frames is shorter than window " + std::to_string(window));
    std::vector<int> starts;
    for (int s = 0; s + window <= n_frames; s += stride) starts.push_back(s);
    if (starts.back() + window < n_frames) starts.push_back(n_frames - window);
    return starts;
}

}  // namespace stamotion

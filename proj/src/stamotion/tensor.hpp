#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "stamotion/common.hpp"

namespace stamotion {

inline long numel_of(const std::vector<int>& shape) {
    long n = 1;
    for (int d : shape) n *= d;
    return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense row-major array. Most of the pipeline treats tensors as 2-D
// matrices; higher-rank data (feature grids) is flattened before it
// enters the compute graph.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        check_contract(numel_of(shape) == static_cast<long>(data.size()),
                       "tensor data length does not match shape " + shape_str(shape));
    }

    static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }
    static TensorT full(std::vector<int> s, T v) {
        TensorT t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static TensorT scalar(T v) { return TensorT({1, 1}, {v}); }

    long numel() const { return static_cast<long>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }

    int rows() const {
        check_contract(shape.size() == 2, "rows() on non-matrix tensor " + shape_str(shape));
        return shape[0];
    }
    int cols() const {
        check_contract(shape.size() == 2, "cols() on non-matrix tensor " + shape_str(shape));
        return shape[1];
    }

    T& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor32 = TensorT<float>;
using Tensor64 = TensorT<double>;

// Named trainable tensor with its gradient accumulator.
template <typename T>
struct ParameterT {
    std::string name;
    TensorT<T> value;
    TensorT<T> grad;

    ParameterT() = default;
    ParameterT(std::string n, TensorT<T> v) : name(std::move(n)), value(std::move(v)) {
        grad = TensorT<T>::zeros(value.shape);
    }

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), T(0)); }
};

}  // namespace stamotion

#pragma once

// Reverse-mode compute graph. Nodes are created eagerly (values computed at
// construction) into an arena; backward() walks the arena in reverse and
// accumulates adjoints. Parameters registered via param() receive their
// gradient contributions in Parameter::grad.
//
// The op set is exactly what the motion pipeline needs; this is not a
// general autodiff library.

#include <cmath>
#include <cstdint>
#include <vector>

#include "stamotion/kernels.hpp"
#include "stamotion/tensor.hpp"

namespace stamotion {

template <typename T>
class GraphT {
  public:
    using Ref = std::int32_t;

    enum class Op : std::uint8_t {
        Const,
        Param,
        Add,
        Sub,
        Mul,
        Scale,      // c * x
        AddConst,   // x + c
        AddRowVec,  // [RxC] + [1xC]
        MatMul,     // [RxK][KxC]
        MatMulNT,   // [RxK][CxK]^T
        Bmm33,      // [Bx9][Bx9] batched 3x3 product
        Bmv3,       // [Bx9][Bx3] batched matrix-vector
        SoftmaxRows,
        Tanh,
        Sigmoid,
        SqrtG,    // sqrt, zero-gradient at 0
        SincSq,   // sin(sqrt s)/sqrt s
        VersSq,   // (1-cos(sqrt s))/s
        RowNormalize,
        RowSum,   // [RxC] -> [Rx1]
        SumAll,   // -> [1x1]
        MeanAll,  // -> [1x1]
        MinAll,
        MaxAll,
        SliceCols,
        SliceRows,
        ConcatCols,
        ConcatRows,
        Reshape,
        ScaleBy,        // x * broadcast [1x1] node
        AddScalarNode,  // x + broadcast [1x1] node
        MulColVec,      // [RxC] * [Rx1] broadcast across columns
        Recip,          // 1/x elementwise
        ClampMin,       // max(x, c), zero gradient in the clamped region
    };

    Ref constant(TensorT<T> v) {
        Node n;
        n.op = Op::Const;
        n.val = std::move(v);
        n.needs_grad = false;
        return push(std::move(n));
    }

    Ref param(ParameterT<T>& p) {
        Node n;
        n.op = Op::Param;
        n.val = p.value;
        n.param = &p;
        n.needs_grad = true;
        return push(std::move(n));
    }

    Ref add(Ref a, Ref b) { return binary_same_shape(Op::Add, a, b); }
    Ref sub(Ref a, Ref b) { return binary_same_shape(Op::Sub, a, b); }
    Ref mul(Ref a, Ref b) { return binary_same_shape(Op::Mul, a, b); }

    Ref scale(Ref a, T c) {
        Node n = unary_node(Op::Scale, a);
        n.cval = c;
        n.val = val(a);
        for (T& v : n.val.data) v *= c;
        return push(std::move(n));
    }

    Ref add_const(Ref a, T c) {
        Node n = unary_node(Op::AddConst, a);
        n.cval = c;
        n.val = val(a);
        for (T& v : n.val.data) v += c;
        return push(std::move(n));
    }

    Ref add_rowvec(Ref m, Ref v) {
        const auto& mv = val(m);
        const auto& vv = val(v);
        check_contract(mv.ndim() == 2 && vv.numel() == mv.cols(),
                       "add_rowvec: shape mismatch " + shape_str(mv.shape) + " + " +
                           shape_str(vv.shape));
        Node n;
        n.op = Op::AddRowVec;
        n.ins = {m, v};
        n.needs_grad = needs(m) || needs(v);
        n.val = mv;
        const int rows = mv.rows(), cols = mv.cols();
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) n.val.data[static_cast<std::size_t>(r) * cols + c] += vv.data[c];
        return push(std::move(n));
    }

    Ref matmul(Ref a, Ref b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        check_contract(av.ndim() == 2 && bv.ndim() == 2 && av.cols() == bv.rows(),
                       "matmul: shape mismatch " + shape_str(av.shape) + " * " +
                           shape_str(bv.shape));
        Node n;
        n.op = Op::MatMul;
        n.ins = {a, b};
        n.needs_grad = needs(a) || needs(b);
        n.val = TensorT<T>({av.rows(), bv.cols()});
        kernels::matmul_nn_auto(av.data.data(), bv.data.data(), n.val.data.data(), av.rows(),
                                av.cols(), bv.cols(), false);
        return push(std::move(n));
    }

    Ref matmul_nt(Ref a, Ref b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        check_contract(av.ndim() == 2 && bv.ndim() == 2 && av.cols() == bv.cols(),
                       "matmul_nt: shape mismatch " + shape_str(av.shape) + " * " +
                           shape_str(bv.shape) + "^T");
        Node n;
        n.op = Op::MatMulNT;
        n.ins = {a, b};
        n.needs_grad = needs(a) || needs(b);
        n.val = TensorT<T>({av.rows(), bv.rows()});
        kernels::matmul_nt_auto(av.data.data(), bv.data.data(), n.val.data.data(), av.rows(),
                                av.cols(), bv.rows(), false);
        return push(std::move(n));
    }

    Ref bmm33(Ref a, Ref b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        check_contract(av.ndim() == 2 && av.cols() == 9 && bv.shape == av.shape,
                       "bmm33: expects matching [Bx9] operands");
        Node n;
        n.op = Op::Bmm33;
        n.ins = {a, b};
        n.needs_grad = needs(a) || needs(b);
        n.val = TensorT<T>(av.shape);
        const int batch = av.rows();
        for (int i = 0; i < batch; ++i) {
            const T* A = av.data.data() + static_cast<std::size_t>(i) * 9;
            const T* B = bv.data.data() + static_cast<std::size_t>(i) * 9;
            T* C = n.val.data.data() + static_cast<std::size_t>(i) * 9;
            mat3_mul(A, B, C);
        }
        return push(std::move(n));
    }

    Ref bmv3(Ref a, Ref v) {
        const auto& av = val(a);
        const auto& vv = val(v);
        check_contract(av.ndim() == 2 && av.cols() == 9 && vv.ndim() == 2 && vv.cols() == 3 &&
                           vv.rows() == av.rows(),
                       "bmv3: expects [Bx9] and [Bx3]");
        Node n;
        n.op = Op::Bmv3;
        n.ins = {a, v};
        n.needs_grad = needs(a) || needs(v);
        n.val = TensorT<T>({av.rows(), 3});
        for (int i = 0; i < av.rows(); ++i) {
            const T* A = av.data.data() + static_cast<std::size_t>(i) * 9;
            const T* x = vv.data.data() + static_cast<std::size_t>(i) * 3;
            T* y = n.val.data.data() + static_cast<std::size_t>(i) * 3;
            for (int r = 0; r < 3; ++r)
                y[r] = A[r * 3 + 0] * x[0] + A[r * 3 + 1] * x[1] + A[r * 3 + 2] * x[2];
        }
        return push(std::move(n));
    }

    Ref softmax_rows(Ref a) {
        const auto& av = val(a);
        check_contract(av.ndim() == 2, "softmax_rows: expects a matrix");
        Node n = unary_node(Op::SoftmaxRows, a);
        n.val = TensorT<T>(av.shape);
        const int rows = av.rows(), cols = av.cols();
        for (int r = 0; r < rows; ++r) {
            const T* x = av.data.data() + static_cast<std::size_t>(r) * cols;
            T* y = n.val.data.data() + static_cast<std::size_t>(r) * cols;
            T mx = x[0];
            for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
            T sum = T(0);
            for (int c = 0; c < cols; ++c) {
                y[c] = std::exp(x[c] - mx);
                sum += y[c];
            }
            for (int c = 0; c < cols; ++c) y[c] /= sum;
        }
        return push(std::move(n));
    }

    Ref tanh_(Ref a) {
        Node n = unary_node(Op::Tanh, a);
        n.val = val(a);
        for (T& v : n.val.data) v = std::tanh(v);
        return push(std::move(n));
    }

    Ref sigmoid(Ref a) {
        Node n = unary_node(Op::Sigmoid, a);
        n.val = val(a);
        for (T& v : n.val.data) v = T(1) / (T(1) + std::exp(-v));
        return push(std::move(n));
    }

    Ref sqrt_guarded(Ref a) {
        Node n = unary_node(Op::SqrtG, a);
        n.val = val(a);
        for (T& v : n.val.data) v = v > T(0) ? std::sqrt(v) : T(0);
        return push(std::move(n));
    }

    // a(s) = sin(sqrt s)/sqrt s, analytic in s (even series).
    Ref sinc_sq(Ref a) {
        Node n = unary_node(Op::SincSq, a);
        n.val = val(a);
        for (T& v : n.val.data) v = sinc_sq_val(v);
        return push(std::move(n));
    }

    // b(s) = (1 - cos(sqrt s))/s, analytic in s.
    Ref vers_sq(Ref a) {
        Node n = unary_node(Op::VersSq, a);
        n.val = val(a);
        for (T& v : n.val.data) v = vers_sq_val(v);
        return push(std::move(n));
    }

    // Rows scaled to unit norm; all-zero rows stay zero.
    Ref row_normalize(Ref a) {
        const auto& av = val(a);
        check_contract(av.ndim() == 2, "row_normalize: expects a matrix");
        Node n = unary_node(Op::RowNormalize, a);
        n.val = TensorT<T>(av.shape);
        const int rows = av.rows(), cols = av.cols();
        for (int r = 0; r < rows; ++r) {
            const T* x = av.data.data() + static_cast<std::size_t>(r) * cols;
            T* y = n.val.data.data() + static_cast<std::size_t>(r) * cols;
            T ss = T(0);
            for (int c = 0; c < cols; ++c) ss += x[c] * x[c];
            const T norm = std::sqrt(ss);
            if (norm > kZeroRowEps) {
                for (int c = 0; c < cols; ++c) y[c] = x[c] / norm;
            }  // else already zero
        }
        return push(std::move(n));
    }

    Ref row_sum(Ref a) {
        const auto& av = val(a);
        check_contract(av.ndim() == 2, "row_sum: expects a matrix");
        Node n = unary_node(Op::RowSum, a);
        n.val = TensorT<T>({av.rows(), 1});
        const int rows = av.rows(), cols = av.cols();
        for (int r = 0; r < rows; ++r) {
            T acc = T(0);
            for (int c = 0; c < cols; ++c) acc += av.data[static_cast<std::size_t>(r) * cols + c];
            n.val.data[r] = acc;
        }
        return push(std::move(n));
    }

    Ref sum_all(Ref a) {
        Node n = unary_node(Op::SumAll, a);
        T acc = T(0);
        for (T v : val(a).data) acc += v;
        n.val = TensorT<T>::scalar(acc);
        return push(std::move(n));
    }

    Ref mean_all(Ref a) {
        Node n = unary_node(Op::MeanAll, a);
        T acc = T(0);
        for (T v : val(a).data) acc += v;
        n.val = TensorT<T>::scalar(acc / static_cast<T>(val(a).numel()));
        return push(std::move(n));
    }

    Ref min_all(Ref a) { return extremum(Op::MinAll, a); }
    Ref max_all(Ref a) { return extremum(Op::MaxAll, a); }

    Ref slice_cols(Ref a, int c0, int c1) {
        const auto& av = val(a);
        check_contract(av.ndim() == 2 && 0 <= c0 && c0 < c1 && c1 <= av.cols(),
                       "slice_cols: bad range");
        Node n = unary_node(Op::SliceCols, a);
        n.i0 = c0;
        n.i1 = c1;
        n.val = TensorT<T>({av.rows(), c1 - c0});
        for (int r = 0; r < av.rows(); ++r)
            for (int c = c0; c < c1; ++c)
                n.val.at(r, c - c0) = av.at(r, c);
        return push(std::move(n));
    }

    Ref slice_rows(Ref a, int r0, int r1) {
        const auto& av = val(a);
        check_contract(av.ndim() == 2 && 0 <= r0 && r0 < r1 && r1 <= av.rows(),
                       "slice_rows: bad range");
        Node n = unary_node(Op::SliceRows, a);
        n.i0 = r0;
        n.i1 = r1;
        n.val = TensorT<T>({r1 - r0, av.cols()});
        std::copy(av.data.begin() + static_cast<std::size_t>(r0) * av.cols(),
                  av.data.begin() + static_cast<std::size_t>(r1) * av.cols(), n.val.data.begin());
        return push(std::move(n));
    }

    Ref concat_cols(const std::vector<Ref>& parts) {
        check_contract(!parts.empty(), "concat_cols: empty input");
        int rows = val(parts[0]).rows(), total = 0;
        for (Ref p : parts) {
            check_contract(val(p).ndim() == 2 && val(p).rows() == rows,
                           "concat_cols: row mismatch");
            total += val(p).cols();
        }
        Node n;
        n.op = Op::ConcatCols;
        n.ins = parts;
        n.needs_grad = false;
        for (Ref p : parts) n.needs_grad = n.needs_grad || needs(p);
        n.val = TensorT<T>({rows, total});
        int off = 0;
        for (Ref p : parts) {
            const auto& pv = val(p);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < pv.cols(); ++c) n.val.at(r, off + c) = pv.at(r, c);
            off += pv.cols();
        }
        return push(std::move(n));
    }

    Ref concat_rows(const std::vector<Ref>& parts) {
        check_contract(!parts.empty(), "concat_rows: empty input");
        int cols = val(parts[0]).cols(), total = 0;
        for (Ref p : parts) {
            check_contract(val(p).ndim() == 2 && val(p).cols() == cols,
                           "concat_rows: column mismatch");
            total += val(p).rows();
        }
        Node n;
        n.op = Op::ConcatRows;
        n.ins = parts;
        n.needs_grad = false;
        for (Ref p : parts) n.needs_grad = n.needs_grad || needs(p);
        n.val = TensorT<T>({total, cols});
        auto it = n.val.data.begin();
        for (Ref p : parts) {
            const auto& pv = val(p);
            it = std::copy(pv.data.begin(), pv.data.end(), it);
        }
        return push(std::move(n));
    }

    Ref reshape(Ref a, std::vector<int> shape) {
        const auto& av = val(a);
        check_contract(numel_of(shape) == av.numel(), "reshape: element count mismatch");
        Node n = unary_node(Op::Reshape, a);
        n.val.shape = std::move(shape);
        n.val.data = av.data;
        return push(std::move(n));
    }

    Ref scale_by(Ref x, Ref s) {
        const auto& sv = val(s);
        check_contract(sv.numel() == 1, "scale_by: scalar operand must be [1x1]");
        Node n;
        n.op = Op::ScaleBy;
        n.ins = {x, s};
        n.needs_grad = needs(x) || needs(s);
        n.val = val(x);
        const T c = sv.data[0];
        for (T& v : n.val.data) v *= c;
        return push(std::move(n));
    }

    Ref add_scalar_node(Ref x, Ref s) {
        const auto& sv = val(s);
        check_contract(sv.numel() == 1, "add_scalar_node: scalar operand must be [1x1]");
        Node n;
        n.op = Op::AddScalarNode;
        n.ins = {x, s};
        n.needs_grad = needs(x) || needs(s);
        n.val = val(x);
        const T c = sv.data[0];
        for (T& v : n.val.data) v += c;
        return push(std::move(n));
    }

    Ref mul_colvec(Ref x, Ref s) {
        const auto& xv = val(x);
        const auto& sv = val(s);
        check_contract(xv.ndim() == 2 && sv.ndim() == 2 && sv.cols() == 1 &&
                           sv.rows() == xv.rows(),
                       "mul_colvec: expects [RxC] and [Rx1]");
        Node n;
        n.op = Op::MulColVec;
        n.ins = {x, s};
        n.needs_grad = needs(x) || needs(s);
        n.val = xv;
        const int rows = xv.rows(), cols = xv.cols();
        for (int r = 0; r < rows; ++r) {
            const T c = sv.data[r];
            for (int j = 0; j < cols; ++j) n.val.data[static_cast<std::size_t>(r) * cols + j] *= c;
        }
        return push(std::move(n));
    }

    Ref recip(Ref a) {
        Node n = unary_node(Op::Recip, a);
        n.val = val(a);
        for (T& v : n.val.data) v = T(1) / v;
        return push(std::move(n));
    }

    Ref clamp_min(Ref a, T floor) {
        Node n = unary_node(Op::ClampMin, a);
        n.cval = floor;
        n.val = val(a);
        for (T& v : n.val.data) v = std::max(v, floor);
        return push(std::move(n));
    }

    // x [RxDin] * w [DinxDout] + b [1xDout]
    Ref linear(Ref x, Ref w, Ref b) { return add_rowvec(matmul(x, w), b); }

    const TensorT<T>& val(Ref i) const { return nodes_[i].val; }
    const TensorT<T>& grad_of(Ref i) const { return nodes_[i].grad; }
    std::size_t size() const { return nodes_.size(); }

    // Reverse pass from a scalar root. Parameter gradients are accumulated
    // (callers zero them beforehand).
    void backward(Ref root) {
        check_contract(val(root).numel() == 1, "backward: root must be scalar");
        for (auto& nd : nodes_) nd.grad.data.clear();
        ensure_grad(root);
        nodes_[root].grad.data[0] = T(1);
        for (Ref i = root; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.grad.data.empty()) continue;
            backprop(n);
        }
        for (auto& nd : nodes_)
            if (nd.op == Op::Param && !nd.grad.data.empty())
                for (std::size_t k = 0; k < nd.grad.data.size(); ++k)
                    nd.param->grad.data[k] += nd.grad.data[k];
    }

  private:
    static constexpr T kZeroRowEps = T(1e-30);

    struct Node {
        Op op = Op::Const;
        std::vector<Ref> ins;
        TensorT<T> val;
        TensorT<T> grad;  // shape mirrors val; data empty until touched
        ParameterT<T>* param = nullptr;
        int i0 = 0, i1 = 0;
        T cval = T(0);
        bool needs_grad = false;
    };

    std::vector<Node> nodes_;

    bool needs(Ref i) const { return nodes_[i].needs_grad; }

    Ref push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<Ref>(nodes_.size() - 1);
    }

    Node unary_node(Op op, Ref a) {
        Node n;
        n.op = op;
        n.ins = {a};
        n.needs_grad = needs(a);
        return n;
    }

    Ref binary_same_shape(Op op, Ref a, Ref b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        check_contract(av.shape == bv.shape, "elementwise op: shape mismatch " +
                                                 shape_str(av.shape) + " vs " +
                                                 shape_str(bv.shape));
        Node n;
        n.op = op;
        n.ins = {a, b};
        n.needs_grad = needs(a) || needs(b);
        n.val = av;
        switch (op) {
            case Op::Add:
                for (std::size_t k = 0; k < n.val.data.size(); ++k) n.val.data[k] += bv.data[k];
                break;
            case Op::Sub:
                for (std::size_t k = 0; k < n.val.data.size(); ++k) n.val.data[k] -= bv.data[k];
                break;
            case Op::Mul:
                for (std::size_t k = 0; k < n.val.data.size(); ++k) n.val.data[k] *= bv.data[k];
                break;
            default:
                check_contract(false, "not an elementwise op");
        }
        return push(std::move(n));
    }

    Ref extremum(Op op, Ref a) {
        Node n = unary_node(op, a);
        const auto& d = val(a).data;
        std::size_t best = 0;
        for (std::size_t k = 1; k < d.size(); ++k) {
            const bool better = (op == Op::MinAll) ? d[k] < d[best] : d[k] > d[best];
            if (better) best = k;
        }
        n.i0 = static_cast<int>(best);
        n.val = TensorT<T>::scalar(d[best]);
        return push(std::move(n));
    }

    void ensure_grad(Ref i) {
        Node& n = nodes_[i];
        if (n.grad.data.empty()) {
            n.grad.shape = n.val.shape;
            n.grad.data.assign(n.val.data.size(), T(0));
        }
    }

    // Adjoint sink for input `which` of node n; allocates on demand.
    TensorT<T>* gin(Node& n, int which) {
        Ref i = n.ins[which];
        if (!nodes_[i].needs_grad) return nullptr;
        ensure_grad(i);
        return &nodes_[i].grad;
    }

    static void mat3_mul(const T* a, const T* b, T* c) {
        for (int r = 0; r < 3; ++r)
            for (int j = 0; j < 3; ++j)
                c[r * 3 + j] =
                    a[r * 3 + 0] * b[0 * 3 + j] + a[r * 3 + 1] * b[1 * 3 + j] + a[r * 3 + 2] * b[2 * 3 + j];
    }

    static T sinc_sq_val(T s) {
        if (s < T(1e-6)) return T(1) - s / T(6) + s * s / T(120);
        const T u = std::sqrt(s);
        return std::sin(u) / u;
    }

    static T sinc_sq_deriv(T s) {
        if (s < T(1e-6)) return T(-1) / T(6) + s / T(60) - s * s / T(1680);
        const T u = std::sqrt(s);
        return (u * std::cos(u) - std::sin(u)) / (T(2) * u * u * u);
    }

    static T vers_sq_val(T s) {
        if (s < T(1e-6)) return T(0.5) - s / T(24) + s * s / T(720);
        const T u = std::sqrt(s);
        return (T(1) - std::cos(u)) / s;
    }

    static T vers_sq_deriv(T s) {
        if (s < T(1e-6)) return T(-1) / T(24) + s / T(360) - s * s / T(13440);
        const T u = std::sqrt(s);
        return (u * std::sin(u) / T(2) - (T(1) - std::cos(u))) / (s * s);
    }

    void backprop(Node& n) {
        const TensorT<T>& g = n.grad;
        switch (n.op) {
            case Op::Const:
            case Op::Param:
                break;
            case Op::Add: {
                for (int w = 0; w < 2; ++w)
                    if (auto* gi = gin(n, w))
                        for (std::size_t k = 0; k < g.data.size(); ++k) gi->data[k] += g.data[k];
                break;
            }
            case Op::Sub: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k) ga->data[k] += g.data[k];
                if (auto* gb = gin(n, 1))
                    for (std::size_t k = 0; k < g.data.size(); ++k) gb->data[k] -= g.data[k];
                break;
            }
            case Op::Mul: {
                const auto& av = val(n.ins[0]);
                const auto& bv = val(n.ins[1]);
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[k] += g.data[k] * bv.data[k];
                if (auto* gb = gin(n, 1))
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        gb->data[k] += g.data[k] * av.data[k];
                break;
            }
            case Op::Scale: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[k] += g.data[k] * n.cval;
                break;
            }
            case Op::AddConst: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k) ga->data[k] += g.data[k];
                break;
            }
            case Op::AddRowVec: {
                const int rows = n.val.rows(), cols = n.val.cols();
                if (auto* gm = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k) gm->data[k] += g.data[k];
                if (auto* gv = gin(n, 1))
                    for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < cols; ++c)
                            gv->data[c] += g.data[static_cast<std::size_t>(r) * cols + c];
                break;
            }
            case Op::MatMul: {
                const auto& av = val(n.ins[0]);
                const auto& bv = val(n.ins[1]);
                // dA += dC * B^T ; dB += A^T * dC
                if (auto* ga = gin(n, 0))
                    kernels::matmul_nt_auto(g.data.data(), bv.data.data(), ga->data.data(),
                                            g.rows(), g.cols(), av.cols(), true);
                if (auto* gb = gin(n, 1))
                    kernels::matmul_tn_auto(av.data.data(), g.data.data(), gb->data.data(),
                                            av.cols(), av.rows(), g.cols(), true);
                break;
            }
            case Op::MatMulNT: {
                // Y = A * B^T : dA += dY * B ; dB += dY^T * A
                const auto& av = val(n.ins[0]);
                const auto& bv = val(n.ins[1]);
                if (auto* ga = gin(n, 0))
                    kernels::matmul_nn_auto(g.data.data(), bv.data.data(), ga->data.data(),
                                            g.rows(), g.cols(), bv.cols(), true);
                if (auto* gb = gin(n, 1))
                    kernels::matmul_tn_auto(g.data.data(), av.data.data(), gb->data.data(),
                                            g.cols(), g.rows(), av.cols(), true);
                break;
            }
            case Op::Bmm33: {
                const auto& av = val(n.ins[0]);
                const auto& bv = val(n.ins[1]);
                const int batch = av.rows();
                auto* ga = gin(n, 0);
                auto* gb = gin(n, 1);
                for (int i = 0; i < batch; ++i) {
                    const T* A = av.data.data() + static_cast<std::size_t>(i) * 9;
                    const T* B = bv.data.data() + static_cast<std::size_t>(i) * 9;
                    const T* G = g.data.data() + static_cast<std::size_t>(i) * 9;
                    if (ga) {
                        T* dA = ga->data.data() + static_cast<std::size_t>(i) * 9;
                        for (int r = 0; r < 3; ++r)
                            for (int c = 0; c < 3; ++c)
                                for (int j = 0; j < 3; ++j)
                                    dA[r * 3 + c] += G[r * 3 + j] * B[c * 3 + j];
                    }
                    if (gb) {
                        T* dB = gb->data.data() + static_cast<std::size_t>(i) * 9;
                        for (int r = 0; r < 3; ++r)
                            for (int c = 0; c < 3; ++c)
                                for (int j = 0; j < 3; ++j)
                                    dB[r * 3 + c] += A[j * 3 + r] * G[j * 3 + c];
                    }
                }
                break;
            }
            case Op::Bmv3: {
                const auto& av = val(n.ins[0]);
                const auto& vv = val(n.ins[1]);
                const int batch = av.rows();
                auto* ga = gin(n, 0);
                auto* gv = gin(n, 1);
                for (int i = 0; i < batch; ++i) {
                    const T* A = av.data.data() + static_cast<std::size_t>(i) * 9;
                    const T* x = vv.data.data() + static_cast<std::size_t>(i) * 3;
                    const T* G = g.data.data() + static_cast<std::size_t>(i) * 3;
                    if (ga) {
                        T* dA = ga->data.data() + static_cast<std::size_t>(i) * 9;
                        for (int r = 0; r < 3; ++r)
                            for (int c = 0; c < 3; ++c) dA[r * 3 + c] += G[r] * x[c];
                    }
                    if (gv) {
                        T* dx = gv->data.data() + static_cast<std::size_t>(i) * 3;
                        for (int r = 0; r < 3; ++r)
                            for (int c = 0; c < 3; ++c) dx[c] += A[r * 3 + c] * G[r];
                    }
                }
                break;
            }
            case Op::SoftmaxRows: {
                if (auto* ga = gin(n, 0)) {
                    const int rows = n.val.rows(), cols = n.val.cols();
                    for (int r = 0; r < rows; ++r) {
                        const T* y = n.val.data.data() + static_cast<std::size_t>(r) * cols;
                        const T* dy = g.data.data() + static_cast<std::size_t>(r) * cols;
                        T dot = T(0);
                        for (int c = 0; c < cols; ++c) dot += dy[c] * y[c];
                        T* dx = ga->data.data() + static_cast<std::size_t>(r) * cols;
                        for (int c = 0; c < cols; ++c) dx[c] += y[c] * (dy[c] - dot);
                    }
                }
                break;
            }
            case Op::Tanh: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[k] += g.data[k] * (T(1) - n.val.data[k] * n.val.data[k]);
                break;
            }
            case Op::Sigmoid: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[k] += g.data[k] * n.val.data[k] * (T(1) - n.val.data[k]);
                break;
            }
            case Op::SqrtG: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        if (n.val.data[k] > T(0))
                            ga->data[k] += g.data[k] * (T(0.5) / n.val.data[k]);
                break;
            }
            case Op::SincSq: {
                if (auto* ga = gin(n, 0)) {
                    const auto& sv = val(n.ins[0]);
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[k] += g.data[k] * sinc_sq_deriv(sv.data[k]);
                }
                break;
            }
            case Op::VersSq: {
                if (auto* ga = gin(n, 0)) {
                    const auto& sv = val(n.ins[0]);
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[k] += g.data[k] * vers_sq_deriv(sv.data[k]);
                }
                break;
            }
            case Op::RowNormalize: {
                if (auto* ga = gin(n, 0)) {
                    const auto& xv = val(n.ins[0]);
                    const int rows = n.val.rows(), cols = n.val.cols();
                    for (int r = 0; r < rows; ++r) {
                        const T* x = xv.data.data() + static_cast<std::size_t>(r) * cols;
                        const T* y = n.val.data.data() + static_cast<std::size_t>(r) * cols;
                        const T* dy = g.data.data() + static_cast<std::size_t>(r) * cols;
                        T ss = T(0);
                        for (int c = 0; c < cols; ++c) ss += x[c] * x[c];
                        const T norm = std::sqrt(ss);
                        if (norm <= kZeroRowEps) continue;
                        T dot = T(0);
                        for (int c = 0; c < cols; ++c) dot += y[c] * dy[c];
                        T* dx = ga->data.data() + static_cast<std::size_t>(r) * cols;
                        for (int c = 0; c < cols; ++c) dx[c] += (dy[c] - y[c] * dot) / norm;
                    }
                }
                break;
            }
            case Op::RowSum: {
                if (auto* ga = gin(n, 0)) {
                    const int rows = ga->rows(), cols = ga->cols();
                    for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < cols; ++c)
                            ga->data[static_cast<std::size_t>(r) * cols + c] += g.data[r];
                }
                break;
            }
            case Op::SumAll: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < ga->data.size(); ++k) ga->data[k] += g.data[0];
                break;
            }
            case Op::MeanAll: {
                if (auto* ga = gin(n, 0)) {
                    const T inv = g.data[0] / static_cast<T>(ga->data.size());
                    for (std::size_t k = 0; k < ga->data.size(); ++k) ga->data[k] += inv;
                }
                break;
            }
            case Op::MinAll:
            case Op::MaxAll: {
                if (auto* ga = gin(n, 0)) ga->data[n.i0] += g.data[0];
                break;
            }
            case Op::SliceCols: {
                if (auto* ga = gin(n, 0)) {
                    const int cols_in = ga->cols();
                    for (int r = 0; r < n.val.rows(); ++r)
                        for (int c = 0; c < n.val.cols(); ++c)
                            ga->data[static_cast<std::size_t>(r) * cols_in + n.i0 + c] +=
                                g.data[static_cast<std::size_t>(r) * n.val.cols() + c];
                }
                break;
            }
            case Op::SliceRows: {
                if (auto* ga = gin(n, 0)) {
                    const int cols = n.val.cols();
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[static_cast<std::size_t>(n.i0) * cols + k] += g.data[k];
                }
                break;
            }
            case Op::ConcatCols: {
                const int rows = n.val.rows(), out_cols = n.val.cols();
                int off = 0;
                for (std::size_t w = 0; w < n.ins.size(); ++w) {
                    const int pc = val(n.ins[w]).cols();
                    if (auto* gi = gin(n, static_cast<int>(w)))
                        for (int r = 0; r < rows; ++r)
                            for (int c = 0; c < pc; ++c)
                                gi->data[static_cast<std::size_t>(r) * pc + c] +=
                                    g.data[static_cast<std::size_t>(r) * out_cols + off + c];
                    off += pc;
                }
                break;
            }
            case Op::ConcatRows: {
                std::size_t off = 0;
                for (std::size_t w = 0; w < n.ins.size(); ++w) {
                    const std::size_t cnt = val(n.ins[w]).data.size();
                    if (auto* gi = gin(n, static_cast<int>(w)))
                        for (std::size_t k = 0; k < cnt; ++k) gi->data[k] += g.data[off + k];
                    off += cnt;
                }
                break;
            }
            case Op::Reshape: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k) ga->data[k] += g.data[k];
                break;
            }
            case Op::ScaleBy: {
                const auto& xv = val(n.ins[0]);
                const T c = val(n.ins[1]).data[0];
                if (auto* gx = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k) gx->data[k] += g.data[k] * c;
                if (auto* gs = gin(n, 1)) {
                    T acc = T(0);
                    for (std::size_t k = 0; k < g.data.size(); ++k) acc += g.data[k] * xv.data[k];
                    gs->data[0] += acc;
                }
                break;
            }
            case Op::AddScalarNode: {
                if (auto* gx = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k) gx->data[k] += g.data[k];
                if (auto* gs = gin(n, 1)) {
                    T acc = T(0);
                    for (std::size_t k = 0; k < g.data.size(); ++k) acc += g.data[k];
                    gs->data[0] += acc;
                }
                break;
            }
            case Op::MulColVec: {
                const auto& xv = val(n.ins[0]);
                const auto& sv = val(n.ins[1]);
                const int rows = xv.rows(), cols = xv.cols();
                auto* gx = gin(n, 0);
                auto* gs = gin(n, 1);
                for (int r = 0; r < rows; ++r) {
                    const T c = sv.data[r];
                    const T* gr = g.data.data() + static_cast<std::size_t>(r) * cols;
                    const T* xr = xv.data.data() + static_cast<std::size_t>(r) * cols;
                    if (gx) {
                        T* dst = gx->data.data() + static_cast<std::size_t>(r) * cols;
                        for (int j = 0; j < cols; ++j) dst[j] += gr[j] * c;
                    }
                    if (gs) {
                        T acc = T(0);
                        for (int j = 0; j < cols; ++j) acc += gr[j] * xr[j];
                        gs->data[r] += acc;
                    }
                }
                break;
            }
            case Op::Recip: {
                if (auto* ga = gin(n, 0))
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        ga->data[k] -= g.data[k] * n.val.data[k] * n.val.data[k];
                break;
            }
            case Op::ClampMin: {
                if (auto* ga = gin(n, 0)) {
                    const auto& xv = val(n.ins[0]);
                    for (std::size_t k = 0; k < g.data.size(); ++k)
                        if (xv.data[k] > n.cval) ga->data[k] += g.data[k];
                }
                break;
            }
        }
    }
};

using Graph32 = GraphT<float>;
using Graph64 = GraphT<double>;

}  // namespace stamotion

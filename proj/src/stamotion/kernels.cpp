#include "stamotion/kernels.hpp"

#include <atomic>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stamotion::kernels {

namespace {
std::atomic<bool> g_parallel{true};
std::atomic<int> g_max_threads{0};

// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kParallelFlopThreshold = 1 << 16;

inline bool go_parallel(long rows, long work) {
#ifdef _OPENMP
    return g_parallel.load(std::memory_order_relaxed) && rows > 1 && work >= kParallelFlopThreshold;
#else
    (void)rows;
    (void)work;
    return false;
#endif
}

// Row bodies shared by the serial and OpenMP variants. Keeping one
// definition per form guarantees both paths run the same instruction
// sequence for a given output row.

template <typename T>
inline void nn_row(const T* a, const T* b, T* c, int r, int inner, int cols, bool accumulate) {
    T* crow = c + static_cast<std::size_t>(r) * cols;
    if (!accumulate)
        for (int j = 0; j < cols; ++j) crow[j] = T(0);
    const T* arow = a + static_cast<std::size_t>(r) * inner;
    for (int k = 0; k < inner; ++k) {
        const T av = arow[k];
        const T* brow = b + static_cast<std::size_t>(k) * cols;
        for (int j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
}

template <typename T>
inline void nt_row(const T* a, const T* b, T* c, int r, int inner, int cols, bool accumulate) {
    T* crow = c + static_cast<std::size_t>(r) * cols;
    const T* arow = a + static_cast<std::size_t>(r) * inner;
    for (int j = 0; j < cols; ++j) {
        const T* brow = b + static_cast<std::size_t>(j) * inner;
        T acc = T(0);
        for (int k = 0; k < inner; ++k) acc += arow[k] * brow[k];
        crow[j] = accumulate ? crow[j] + acc : acc;
    }
}

template <typename T>
inline void tn_row(const T* a, const T* b, T* c, int r, int out_rows, int inner, int cols,
                   bool accumulate) {
    // c[r, j] = sum_k a[k, r] * b[k, j]; A is [inner x out_rows], B is [inner x cols].
    T* crow = c + static_cast<std::size_t>(r) * cols;
    if (!accumulate)
        for (int j = 0; j < cols; ++j) crow[j] = T(0);
    for (int k = 0; k < inner; ++k) {
        const T av = a[static_cast<std::size_t>(k) * out_rows + r];
        const T* brow = b + static_cast<std::size_t>(k) * cols;
        for (int j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
}

}  // namespace

void set_max_threads(int n) {
    g_max_threads.store(n, std::memory_order_relaxed);
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

int max_threads() { return g_max_threads.load(std::memory_order_relaxed); }

void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

template <typename T>
void matmul_nn_serial(const T* a, const T* b, T* c, int rows, int inner, int cols,
                      bool accumulate) {
    for (int r = 0; r < rows; ++r) nn_row(a, b, c, r, inner, cols, accumulate);
}

template <typename T>
void matmul_nn_omp(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) nn_row(a, b, c, r, inner, cols, accumulate);
}

template <typename T>
void matmul_nt_serial(const T* a, const T* b, T* c, int rows, int inner, int cols,
                      bool accumulate) {
    for (int r = 0; r < rows; ++r) nt_row(a, b, c, r, inner, cols, accumulate);
}

template <typename T>
void matmul_nt_omp(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) nt_row(a, b, c, r, inner, cols, accumulate);
}

template <typename T>
void matmul_tn_serial(const T* a, const T* b, T* c, int rows, int inner, int cols,
                      bool accumulate) {
    for (int r = 0; r < rows; ++r) tn_row(a, b, c, r, rows, inner, cols, accumulate);
}

template <typename T>
void matmul_tn_omp(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) tn_row(a, b, c, r, rows, inner, cols, accumulate);
}

template <typename T>
void matmul_nn_auto(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate) {
    if (go_parallel(rows, static_cast<long>(rows) * inner * cols))
        matmul_nn_omp(a, b, c, rows, inner, cols, accumulate);
    else
        matmul_nn_serial(a, b, c, rows, inner, cols, accumulate);
}

template <typename T>
void matmul_nt_auto(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate) {
    if (go_parallel(rows, static_cast<long>(rows) * inner * cols))
        matmul_nt_omp(a, b, c, rows, inner, cols, accumulate);
    else
        matmul_nt_serial(a, b, c, rows, inner, cols, accumulate);
}

template <typename T>
void matmul_tn_auto(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate) {
    if (go_parallel(rows, static_cast<long>(rows) * inner * cols))
        matmul_tn_omp(a, b, c, rows, inner, cols, accumulate);
    else
        matmul_tn_serial(a, b, c, rows, inner, cols, accumulate);
}

#define STAMOTION_INSTANTIATE(T)                                                              \
    template void matmul_nn_serial<T>(const T*, const T*, T*, int, int, int, bool);          \
    template void matmul_nn_omp<T>(const T*, const T*, T*, int, int, int, bool);             \
    template void matmul_nt_serial<T>(const T*, const T*, T*, int, int, int, bool);          \
    template void matmul_nt_omp<T>(const T*, const T*, T*, int, int, int, bool);             \
    template void matmul_tn_serial<T>(const T*, const T*, T*, int, int, int, bool);          \
    template void matmul_tn_omp<T>(const T*, const T*, T*, int, int, int, bool);             \
    template void matmul_nn_auto<T>(const T*, const T*, T*, int, int, int, bool);            \
    template void matmul_nt_auto<T>(const T*, const T*, T*, int, int, int, bool);            \
    template void matmul_tn_auto<T>(const T*, const T*, T*, int, int, int, bool);

STAMOTION_INSTANTIATE(float)
STAMOTION_INSTANTIATE(double)

#undef STAMOTION_INSTANTIATE

}  // namespace stamotion::kernels

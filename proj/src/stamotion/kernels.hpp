#pragma once

// Dense matrix kernels backing the compute graph. Every kernel exists in a
// serial reference form and an OpenMP form parallelized over the output
// rows. The per-element accumulation order is identical in both, so for a
// given build the two produce bit-identical results; the *_auto entry
// points dispatch on problem size and a global switch.
//
// nn: C = A[RxK] * B[KxC]
// nt: C = A[RxK] * B[CxK]^T
// tn: C = A[KxR]^T * B[KxC]

namespace stamotion::kernels {

// Upper bound on OpenMP threads used by the kernels (and by any other
// parallel region in the project). 0 = library default.
void set_max_threads(int n);
int max_threads();

// Force the serial reference path regardless of problem size.
void set_parallel_enabled(bool on);
bool parallel_enabled();

template <typename T>
void matmul_nn_serial(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);
template <typename T>
void matmul_nn_omp(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);

template <typename T>
void matmul_nt_serial(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);
template <typename T>
void matmul_nt_omp(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);

template <typename T>
void matmul_tn_serial(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);
template <typename T>
void matmul_tn_omp(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);

template <typename T>
void matmul_nn_auto(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);
template <typename T>
void matmul_nt_auto(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);
template <typename T>
void matmul_tn_auto(const T* a, const T* b, T* c, int rows, int inner, int cols, bool accumulate);

}  // namespace stamotion::kernels

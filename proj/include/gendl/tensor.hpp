#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gendl {

// Dense row-major tensor; images and activations use NCHW order.
template <typename T>
struct tensor {
    std::vector<int> shape;
    std::vector<T> v;

    tensor() = default;
    explicit tensor(std::vector<int> s, T fill = T(0))
        : shape(std::move(s)), v(static_cast<std::size_t>(count(shape)), fill) {}

    static long long count(const std::vector<int>& s) {
        long long n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("negative tensor dim");
            n *= d;
        }
        return n;
    }

    int size() const { return static_cast<int>(v.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    T& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    const T& operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    T& at2(int n, int j) { return v[static_cast<std::size_t>(n) * shape[1] + j]; }
    const T& at2(int n, int j) const {
        return v[static_cast<std::size_t>(n) * shape[1] + j];
    }
    T& at4(int n, int c, int h, int w) {
        return v[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) *
                     shape[3] +
                 w];
    }
    const T& at4(int n, int c, int h, int w) const {
        return v[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) *
                     shape[3] +
                 w];
    }

    bool same_shape(const tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string r = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    return r + "]";
}

// Sequential GEMM kernels with a fixed accumulation order so results are
// bit-reproducible. All accumulate into C.

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_acc_nn(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        T* crow = C + static_cast<std::size_t>(m) * N;
        const T* arow = A + static_cast<std::size_t>(m) * K;
        for (int k = 0; k < K; ++k) {
            const T a = arow[k];
            const T* brow = B + static_cast<std::size_t>(k) * N;
            for (int n = 0; n < N; ++n) crow[n] += a * brow[n];
        }
    }
}

// C[M,N] += A[M,K] * B[N,K]^T  (dot products along contiguous rows).
// Sixteen fixed partial sums per dot product keep the reduction
// vectorizable without relaxing FP semantics; the combine order is pinned,
// so results stay bit-reproducible.
template <typename T>
void gemm_acc_nt(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        const T* arow = A + static_cast<std::size_t>(m) * K;
        T* crow = C + static_cast<std::size_t>(m) * N;
        for (int n = 0; n < N; ++n) {
            const T* brow = B + static_cast<std::size_t>(n) * K;
            T acc[16] = {};
            int k = 0;
            for (; k + 16 <= K; k += 16)
                for (int u = 0; u < 16; ++u)
                    acc[u] += arow[k + u] * brow[k + u];
            T s = (((acc[0] + acc[8]) + (acc[1] + acc[9])) +
                   ((acc[2] + acc[10]) + (acc[3] + acc[11]))) +
                  (((acc[4] + acc[12]) + (acc[5] + acc[13])) +
                   ((acc[6] + acc[14]) + (acc[7] + acc[15])));
            for (; k < K; ++k) s += arow[k] * brow[k];
            crow[n] += s;
        }
    }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename T>
void gemm_acc_tn(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int k = 0; k < K; ++k) {
        const T* arow = A + static_cast<std::size_t>(k) * M;
        const T* brow = B + static_cast<std::size_t>(k) * N;
        for (int m = 0; m < M; ++m) {
            const T a = arow[m];
            T* crow = C + static_cast<std::size_t>(m) * N;
            for (int n = 0; n < N; ++n) crow[n] += a * brow[n];
        }
    }
}

}  // namespace gendl

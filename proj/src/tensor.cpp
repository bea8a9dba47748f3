// SPDX-License-Identifier: Apache-2.0
#include "scomcp/tensor.hpp"

namespace scomcp::nn {

namespace {

// C[m,n] += A[m,k] * B[k,n], j-inner so the compiler vectorizes the n loop.
void gemm_nn(const double* A, const double* B, double* C, int m, int k, int n, double alpha) {
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<size_t>(i) * k;
        double* c = C + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = alpha * a[p];
            if (av == 0.0) continue;
            const double* b = B + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

// C[m,n] += A^T[m,k] * B[k,n] with A stored [k,m]
void gemm_tn(const double* A, const double* B, double* C, int m, int k, int n, double alpha) {
    for (int p = 0; p < k; ++p) {
        const double* a = A + static_cast<size_t>(p) * m;
        const double* b = B + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = alpha * a[i];
            if (av == 0.0) continue;
            double* c = C + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

// C[m,n] += A[m,k] * B^T[k,n] with B stored [n,k]; dot-product form
void gemm_nt(const double* A, const double* B, double* C, int m, int k, int n, double alpha) {
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<size_t>(i) * k;
        double* c = C + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* b = B + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[p] * b[p];
            c[j] += alpha * acc;
        }
    }
}

}  // namespace

void gemm(const Tensor& A, bool transA, const Tensor& B, bool transB, Tensor& C,
          double alpha, double beta) {
    const int m = transA ? A.cols() : A.rows();
    const int k = transA ? A.rows() : A.cols();
    const int kb = transB ? B.cols() : B.rows();
    const int n = transB ? B.rows() : B.cols();
    if (k != kb) throw std::invalid_argument("gemm: inner dimension mismatch");
    if (C.rows() != m || C.cols() != n) throw std::invalid_argument("gemm: output shape mismatch");

    if (beta == 0.0)
        C.fill(0.0);
    else if (beta != 1.0)
        for (int64_t i = 0; i < C.size(); ++i) C[i] *= beta;

    if (!transA && !transB)
        gemm_nn(A.data(), B.data(), C.data(), m, k, n, alpha);
    else if (transA && !transB)
        gemm_tn(A.data(), B.data(), C.data(), m, k, n, alpha);
    else if (!transA && transB)
        gemm_nt(A.data(), B.data(), C.data(), m, k, n, alpha);
    else {
        // A^T * B^T: rare; fall back through an explicit transpose of A
        Tensor At(A.cols(), A.rows());
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j) At.at(j, i) = A.at(i, j);
        gemm_nt(At.data(), B.data(), C.data(), m, k, n, alpha);
    }
}

Tensor matmul(const Tensor& A, const Tensor& B) {
    Tensor C(A.rows(), B.cols());
    gemm(A, false, B, false, C);
    return C;
}

}  // namespace scomcp::nn

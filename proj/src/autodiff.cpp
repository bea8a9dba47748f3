// SPDX-License-Identifier: Apache-2.0
#include "scomcp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace scomcp::nn {

namespace {

Var make_node(Tensor val, std::vector<Var> parents, std::function<void(Node&)> backfn) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    n->requires_grad = rg;
    if (rg) {
        n->parents = std::move(parents);
        n->backfn = std::move(backfn);
    }
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->val.same_shape(b->val)) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->requires_grad = false;
    return n;
}

Var leaf(Tensor v, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->requires_grad = requires_grad;
    return n;
}

void backward(const Var& root) {
    if (root->val.rows() != 1 || root->val.cols() != 1)
        throw std::invalid_argument("backward: root must be a scalar");
    if (!root->requires_grad) return;

    // iterative DFS topological order
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].get();
            ++idx;
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        if (n->backfn && n->grad.size() > 0) n->backfn(*n);
    }
}

// ---------------- elementwise ----------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] += b->val[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (b->requires_grad) {
            auto& g = b->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] -= b->val[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (b->requires_grad) {
            auto& g = b->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= b->val[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * b->val[i];
        }
        if (b->requires_grad) {
            auto& g = b->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * a->val[i];
        }
    });
}

Var neg(const Var& a) { return scale_const(a, -1.0); }

Var scale_const(const Var& a, double s) {
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= s;
    return make_node(std::move(out), {a}, [a, s](Node& n) {
        auto& g = a->ensure_grad();
        for (int64_t i = 0; i < g.size(); ++i) g[i] += s * n.grad[i];
    });
}

Var add_const_t(const Var& a, const Tensor& t) {
    if (!a->val.same_shape(t)) throw std::invalid_argument("add_const_t: shape mismatch");
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] += t[i];
    return make_node(std::move(out), {a}, [a](Node& n) {
        auto& g = a->ensure_grad();
        for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

Var scale_var(const Var& a, const Var& s) {
    if (s->val.size() != 1) throw std::invalid_argument("scale_var: scale must be scalar");
    const double sv = s->val[0];
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= sv;
    return make_node(std::move(out), {a, s}, [a, s, sv](Node& n) {
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += sv * n.grad[i];
        }
        if (s->requires_grad) {
            auto& g = s->ensure_grad();
            double acc = 0.0;
            for (int64_t i = 0; i < n.grad.size(); ++i) acc += n.grad[i] * a->val[i];
            g[0] += acc;
        }
    });
}

Var add_rowvec(const Var& x, const Var& v) {
    if (v->val.rows() != 1 || v->val.cols() != x->val.cols())
        throw std::invalid_argument("add_rowvec: shape mismatch");
    Tensor out = x->val;
    const int R = out.rows(), C = out.cols();
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) out.at(r, c) += v->val[c];
    return make_node(std::move(out), {x, v}, [x, v](Node& n) {
        const int R = n.val.rows(), C = n.val.cols();
        if (x->requires_grad) {
            auto& g = x->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (v->requires_grad) {
            auto& g = v->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) g[c] += n.grad.at(r, c);
        }
    });
}

Var mul_rowvec(const Var& x, const Var& v) {
    if (v->val.rows() != 1 || v->val.cols() != x->val.cols())
        throw std::invalid_argument("mul_rowvec: shape mismatch");
    Tensor out = x->val;
    const int R = out.rows(), C = out.cols();
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) out.at(r, c) *= v->val[c];
    return make_node(std::move(out), {x, v}, [x, v](Node& n) {
        const int R = n.val.rows(), C = n.val.cols();
        if (x->requires_grad) {
            auto& g = x->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) g.at(r, c) += n.grad.at(r, c) * v->val[c];
        }
        if (v->requires_grad) {
            auto& g = v->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) g[c] += n.grad.at(r, c) * x->val.at(r, c);
        }
    });
}

Var mul_colvec(const Var& x, const Var& v) {
    if (v->val.cols() != 1 || v->val.rows() != x->val.rows())
        throw std::invalid_argument("mul_colvec: shape mismatch");
    Tensor out = x->val;
    const int R = out.rows(), C = out.cols();
    for (int r = 0; r < R; ++r) {
        const double s = v->val[r];
        for (int c = 0; c < C; ++c) out.at(r, c) *= s;
    }
    return make_node(std::move(out), {x, v}, [x, v](Node& n) {
        const int R = n.val.rows(), C = n.val.cols();
        if (x->requires_grad) {
            auto& g = x->ensure_grad();
            for (int r = 0; r < R; ++r) {
                const double s = v->val[r];
                for (int c = 0; c < C; ++c) g.at(r, c) += n.grad.at(r, c) * s;
            }
        }
        if (v->requires_grad) {
            auto& g = v->ensure_grad();
            for (int r = 0; r < R; ++r) {
                double acc = 0.0;
                for (int c = 0; c < C; ++c) acc += n.grad.at(r, c) * x->val.at(r, c);
                g[r] += acc;
            }
        }
    });
}

// ---------------- linear algebra ----------------

Var matmul_op(const Var& a, const Var& b) {
    Tensor out(a->val.rows(), b->val.cols());
    gemm(a->val, false, b->val, false, out);
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) gemm(n.grad, false, b->val, true, a->ensure_grad(), 1.0, 1.0);
        if (b->requires_grad) gemm(a->val, true, n.grad, false, b->ensure_grad(), 1.0, 1.0);
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    Tensor out(a->val.rows(), b->val.rows());
    gemm(a->val, false, b->val, true, out);
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) gemm(n.grad, false, b->val, false, a->ensure_grad(), 1.0, 1.0);
        if (b->requires_grad) gemm(n.grad, true, a->val, false, b->ensure_grad(), 1.0, 1.0);
    });
}

// ---------------- nonlinearities ----------------

Var relu(const Var& a) {
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i)
        if (out[i] < 0.0) out[i] = 0.0;
    return make_node(std::move(out), {a}, [a](Node& n) {
        auto& g = a->ensure_grad();
        for (int64_t i = 0; i < g.size(); ++i)
            if (a->val[i] > 0.0) g[i] += n.grad[i];
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a->val;
    for (int64_t i = 0; i < out.size(); ++i) {
        const double x = out[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return make_node(std::move(out), {a}, [a](Node& n) {
        auto& g = a->ensure_grad();
        for (int64_t i = 0; i < g.size(); ++i) {
            const double y = n.val[i];
            g[i] += n.grad[i] * y * (1.0 - y);
        }
    });
}

Var softmax_rows(const Var& x) {
    Tensor out = x->val;
    const int R = out.rows(), C = out.cols();
    for (int r = 0; r < R; ++r) {
        double mx = -1e300;
        for (int c = 0; c < C; ++c) mx = std::max(mx, out.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < C; ++c) {
            double e = std::exp(out.at(r, c) - mx);
            out.at(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < C; ++c) out.at(r, c) /= sum;
    }
    return make_node(std::move(out), {x}, [x](Node& n) {
        auto& g = x->ensure_grad();
        const int R = n.val.rows(), C = n.val.cols();
        for (int r = 0; r < R; ++r) {
            double dot = 0.0;
            for (int c = 0; c < C; ++c) dot += n.grad.at(r, c) * n.val.at(r, c);
            for (int c = 0; c < C; ++c) g.at(r, c) += n.val.at(r, c) * (n.grad.at(r, c) - dot);
        }
    });
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
    const int R = x->val.rows(), C = x->val.cols();
    if (gain->val.cols() != C || bias->val.cols() != C)
        throw std::invalid_argument("layer_norm_rows: affine shape mismatch");
    Tensor out(R, C);
    auto xhat = std::make_shared<Tensor>(R, C);
    auto inv_std = std::make_shared<std::vector<double>>(R);
    for (int r = 0; r < R; ++r) {
        double mu = 0.0;
        for (int c = 0; c < C; ++c) mu += x->val.at(r, c);
        mu /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) {
            const double d = x->val.at(r, c) - mu;
            var += d * d;
        }
        var /= C;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (int c = 0; c < C; ++c) {
            const double xh = (x->val.at(r, c) - mu) * is;
            xhat->at(r, c) = xh;
            out.at(r, c) = xh * gain->val[c] + bias->val[c];
        }
    }
    return make_node(std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std](Node& n) {
        const int R = n.val.rows(), C = n.val.cols();
        if (gain->requires_grad) {
            auto& gg = gain->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) gg[c] += n.grad.at(r, c) * xhat->at(r, c);
        }
        if (bias->requires_grad) {
            auto& gb = bias->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) gb[c] += n.grad.at(r, c);
        }
        if (x->requires_grad) {
            auto& gx = x->ensure_grad();
            for (int r = 0; r < R; ++r) {
                double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double dxh = n.grad.at(r, c) * gain->val[c];
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xhat->at(r, c);
                }
                const double is = (*inv_std)[r];
                for (int c = 0; c < C; ++c) {
                    const double dxh = n.grad.at(r, c) * gain->val[c];
                    gx.at(r, c) += is * (dxh - sum_dxh / C - xhat->at(r, c) * sum_dxh_xh / C);
                }
            }
        }
    });
}

// ---------------- reductions / reshapes ----------------

Var mean_over_rows(const Var& x) {
    const int R = x->val.rows(), C = x->val.cols();
    Tensor out(1, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) out[c] += x->val.at(r, c);
    for (int c = 0; c < C; ++c) out[c] /= R;
    return make_node(std::move(out), {x}, [x, R](Node& n) {
        auto& g = x->ensure_grad();
        const int C = n.val.cols();
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) g.at(r, c) += n.grad[c] / R;
    });
}

Var max_over_rows(const Var& x) {
    const int R = x->val.rows(), C = x->val.cols();
    Tensor out(1, C);
    auto argmax = std::make_shared<std::vector<int>>(C, 0);
    for (int c = 0; c < C; ++c) {
        double best = x->val.at(0, c);
        int bi = 0;
        for (int r = 1; r < R; ++r)
            if (x->val.at(r, c) > best) {
                best = x->val.at(r, c);
                bi = r;
            }
        out[c] = best;
        (*argmax)[c] = bi;
    }
    return make_node(std::move(out), {x}, [x, argmax](Node& n) {
        auto& g = x->ensure_grad();
        const int C = n.val.cols();
        for (int c = 0; c < C; ++c) g.at((*argmax)[c], c) += n.grad[c];
    });
}

Var rowwise_dot(const Var& a, const Var& b) {
    check_same_shape(a, b, "rowwise_dot");
    const int R = a->val.rows(), C = a->val.cols();
    Tensor out(R, 1);
    for (int r = 0; r < R; ++r) {
        double acc = 0.0;
        for (int c = 0; c < C; ++c) acc += a->val.at(r, c) * b->val.at(r, c);
        out[r] = acc;
    }
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        const int R = a->val.rows(), C = a->val.cols();
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) g.at(r, c) += n.grad[r] * b->val.at(r, c);
        }
        if (b->requires_grad) {
            auto& g = b->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) g.at(r, c) += n.grad[r] * a->val.at(r, c);
        }
    });
}

Var concat_cols(const Var& a, const Var& b) {
    if (a->val.rows() != b->val.rows()) throw std::invalid_argument("concat_cols: row mismatch");
    const int R = a->val.rows(), Ca = a->val.cols(), Cb = b->val.cols();
    Tensor out(R, Ca + Cb);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < Ca; ++c) out.at(r, c) = a->val.at(r, c);
        for (int c = 0; c < Cb; ++c) out.at(r, Ca + c) = b->val.at(r, c);
    }
    return make_node(std::move(out), {a, b}, [a, b, Ca, Cb](Node& n) {
        const int R = n.val.rows();
        if (a->requires_grad) {
            auto& g = a->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < Ca; ++c) g.at(r, c) += n.grad.at(r, c);
        }
        if (b->requires_grad) {
            auto& g = b->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < Cb; ++c) g.at(r, c) += n.grad.at(r, Ca + c);
        }
    });
}

Var col_slice(const Var& x, int c0, int c1) {
    const int R = x->val.rows(), C = x->val.cols();
    if (c0 < 0 || c1 > C || c0 >= c1) throw std::invalid_argument("col_slice: bad range");
    Tensor out(R, c1 - c0);
    for (int r = 0; r < R; ++r)
        for (int c = c0; c < c1; ++c) out.at(r, c - c0) = x->val.at(r, c);
    return make_node(std::move(out), {x}, [x, c0, c1](Node& n) {
        auto& g = x->ensure_grad();
        const int R = n.val.rows();
        for (int r = 0; r < R; ++r)
            for (int c = c0; c < c1; ++c) g.at(r, c) += n.grad.at(r, c - c0);
    });
}

Var reshape(const Var& x, int r, int c) {
    Tensor out = x->val.reshaped(r, c);
    return make_node(std::move(out), {x}, [x](Node& n) {
        auto& g = x->ensure_grad();
        for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

Var sum_all(const Var& x) {
    Tensor out(1, 1);
    double acc = 0.0;
    for (int64_t i = 0; i < x->val.size(); ++i) acc += x->val[i];
    out[0] = acc;
    return make_node(std::move(out), {x}, [x](Node& n) {
        auto& g = x->ensure_grad();
        const double s = n.grad[0];
        for (int64_t i = 0; i < g.size(); ++i) g[i] += s;
    });
}

Var mean_all(const Var& x) {
    const double inv = 1.0 / static_cast<double>(x->val.size());
    return scale_const(sum_all(x), inv);
}

Var mse(const Var& a, const Var& b) {
    auto d = sub(a, b);
    return mean_all(mul(d, d));
}

// ---------------- gather / scatter ----------------

Var gather_rows(const Var& x, std::vector<int> idx) {
    const int C = x->val.cols();
    Tensor out(static_cast<int>(idx.size()), C);
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= x->val.rows()) throw std::out_of_range("gather_rows: index out of range");
        for (int c = 0; c < C; ++c) out.at(static_cast<int>(i), c) = x->val.at(idx[i], c);
    }
    auto ids = std::make_shared<std::vector<int>>(std::move(idx));
    return make_node(std::move(out), {x}, [x, ids](Node& n) {
        auto& g = x->ensure_grad();
        const int C = n.val.cols();
        for (size_t i = 0; i < ids->size(); ++i)
            for (int c = 0; c < C; ++c) g.at((*ids)[i], c) += n.grad.at(static_cast<int>(i), c);
    });
}

Var scatter_rows(const Var& x, std::vector<int> idx, int rows) {
    if (static_cast<int>(idx.size()) != x->val.rows())
        throw std::invalid_argument("scatter_rows: index count mismatch");
    const int C = x->val.cols();
    Tensor out(rows, C);
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= rows) throw std::out_of_range("scatter_rows: index out of range");
        for (int c = 0; c < C; ++c) out.at(idx[i], c) = x->val.at(static_cast<int>(i), c);
    }
    auto ids = std::make_shared<std::vector<int>>(std::move(idx));
    return make_node(std::move(out), {x}, [x, ids](Node& n) {
        auto& g = x->ensure_grad();
        const int C = n.val.cols();
        for (size_t i = 0; i < ids->size(); ++i)
            for (int c = 0; c < C; ++c) g.at(static_cast<int>(i), c) += n.grad.at((*ids)[i], c);
    });
}

// ---------------- convolution ----------------

namespace {

// col is [H*W, Cin*k*k]; zero padding, stride 1
void im2col(const Tensor& x, int H, int W, int k, Tensor& col) {
    const int Cin = x.cols();
    const int p = k / 2;
    col.fill(0.0);
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            double* dst = col.data() + (static_cast<size_t>(i) * W + j) * (Cin * k * k);
            for (int ci = 0; ci < Cin; ++ci) {
                for (int di = 0; di < k; ++di) {
                    const int si = i + di - p;
                    if (si < 0 || si >= H) continue;
                    for (int dj = 0; dj < k; ++dj) {
                        const int sj = j + dj - p;
                        if (sj < 0 || sj >= W) continue;
                        dst[ci * k * k + di * k + dj] = x.at(si * W + sj, ci);
                    }
                }
            }
        }
    }
}

void col2im_add(const Tensor& dcol, int H, int W, int k, Tensor& dx) {
    const int Cin = dx.cols();
    const int p = k / 2;
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            const double* src = dcol.data() + (static_cast<size_t>(i) * W + j) * (Cin * k * k);
            for (int ci = 0; ci < Cin; ++ci) {
                for (int di = 0; di < k; ++di) {
                    const int si = i + di - p;
                    if (si < 0 || si >= H) continue;
                    for (int dj = 0; dj < k; ++dj) {
                        const int sj = j + dj - p;
                        if (sj < 0 || sj >= W) continue;
                        dx.at(si * W + sj, ci) += src[ci * k * k + di * k + dj];
                    }
                }
            }
        }
    }
}

}  // namespace

Var conv2d(const Var& x, int H, int W, const Var& wgt, const Var& bias, int k) {
    const int Cin = x->val.cols();
    const int Cout = wgt->val.rows();
    if (x->val.rows() != H * W) throw std::invalid_argument("conv2d: map size mismatch");
    if (wgt->val.cols() != Cin * k * k) throw std::invalid_argument("conv2d: weight shape mismatch");
    if (bias->val.rows() != 1 || bias->val.cols() != Cout) throw std::invalid_argument("conv2d: bias shape mismatch");
    if (k % 2 == 0) throw std::invalid_argument("conv2d: kernel must be odd");

    Tensor out(H * W, Cout);
    if (k == 1) {
        gemm(x->val, false, wgt->val, true, out);
        for (int r = 0; r < H * W; ++r)
            for (int c = 0; c < Cout; ++c) out.at(r, c) += bias->val[c];
        return make_node(std::move(out), {x, wgt, bias}, [x, wgt, bias](Node& n) {
            if (x->requires_grad) gemm(n.grad, false, wgt->val, false, x->ensure_grad(), 1.0, 1.0);
            if (wgt->requires_grad) gemm(n.grad, true, x->val, false, wgt->ensure_grad(), 1.0, 1.0);
            if (bias->requires_grad) {
                auto& gb = bias->ensure_grad();
                for (int r = 0; r < n.val.rows(); ++r)
                    for (int c = 0; c < n.val.cols(); ++c) gb[c] += n.grad.at(r, c);
            }
        });
    }

    auto col = std::make_shared<Tensor>(H * W, Cin * k * k);
    im2col(x->val, H, W, k, *col);
    gemm(*col, false, wgt->val, true, out);
    for (int r = 0; r < H * W; ++r)
        for (int c = 0; c < Cout; ++c) out.at(r, c) += bias->val[c];

    return make_node(std::move(out), {x, wgt, bias}, [x, wgt, bias, col, H, W, k](Node& n) {
        if (wgt->requires_grad) gemm(n.grad, true, *col, false, wgt->ensure_grad(), 1.0, 1.0);
        if (bias->requires_grad) {
            auto& gb = bias->ensure_grad();
            for (int r = 0; r < n.val.rows(); ++r)
                for (int c = 0; c < n.val.cols(); ++c) gb[c] += n.grad.at(r, c);
        }
        if (x->requires_grad) {
            Tensor dcol(col->rows(), col->cols());
            gemm(n.grad, false, wgt->val, false, dcol);
            col2im_add(dcol, H, W, k, x->ensure_grad());
        }
    });
}

// ---------------- straight-through / channel helpers ----------------

Var ste_threshold(const Var& probs, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("ste_threshold: gamma must be >= 0");
    Tensor out = probs->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = out[i] > gamma ? 1.0 : 0.0;
    return make_node(std::move(out), {probs}, [probs](Node& n) {
        auto& g = probs->ensure_grad();
        for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

Var cmul_const(const Var& z, const Tensor& h) {
    if (!z->val.same_shape(h)) throw std::invalid_argument("cmul_const: shape mismatch");
    if (z->val.cols() % 2 != 0) throw std::invalid_argument("cmul_const: needs interleaved complex layout");
    Tensor out = z->val;
    const int64_t np = out.size() / 2;
    for (int64_t i = 0; i < np; ++i) {
        const double zr = z->val[2 * i], zi = z->val[2 * i + 1];
        const double hr = h[2 * i], hi = h[2 * i + 1];
        out[2 * i] = hr * zr - hi * zi;
        out[2 * i + 1] = hr * zi + hi * zr;
    }
    auto hc = std::make_shared<Tensor>(h);
    return make_node(std::move(out), {z}, [z, hc](Node& n) {
        auto& g = z->ensure_grad();
        const int64_t np = n.val.size() / 2;
        for (int64_t i = 0; i < np; ++i) {
            const double gr = n.grad[2 * i], gi = n.grad[2 * i + 1];
            const double hr = (*hc)[2 * i], hi = (*hc)[2 * i + 1];
            g[2 * i] += hr * gr + hi * gi;
            g[2 * i + 1] += -hi * gr + hr * gi;
        }
    });
}

Var normalize_power(const Var& z, double p_bound) {
    if (p_bound <= 0.0) throw std::invalid_argument("normalize_power: p_bound must be > 0");
    if (z->val.cols() % 2 != 0) throw std::invalid_argument("normalize_power: needs interleaved complex layout");
    const int64_t n_sym = z->val.size() / 2;
    double ss = 0.0;
    for (int64_t i = 0; i < z->val.size(); ++i) ss += z->val[i] * z->val[i];
    if (ss == 0.0) {
        // all-zero input passes through untouched
        Tensor out = z->val;
        return make_node(std::move(out), {z}, [z](Node& n) {
            auto& g = z->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        });
    }
    const double s = std::sqrt(p_bound * static_cast<double>(n_sym) / ss);
    Tensor out = z->val;
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= s;
    return make_node(std::move(out), {z}, [z, s, ss](Node& n) {
        auto& g = z->ensure_grad();
        double gz = 0.0;
        for (int64_t i = 0; i < n.grad.size(); ++i) gz += n.grad[i] * z->val[i];
        for (int64_t i = 0; i < g.size(); ++i) g[i] += s * (n.grad[i] - z->val[i] * gz / ss);
    });
}

}  // namespace scomcp::nn

#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "digit/matrix.hpp"

namespace digit {

/// Reverse-mode tape over dense matrices. Operations append nodes in
/// topological order; backward() walks the tape in reverse creation order,
/// so adjoints of nodes that never feed the loss stay exactly zero.
/// Single-writer while recording; backward is single-threaded.
template <typename T>
class Tape {
public:
    using Mat = MatT<T>;

    int input(Mat m) { return push(std::move(m), nullptr); }

    const Mat& value(int i) const { return nodes_[i].val; }

    /// Adjoint of node i after backward(); zeros if the node is disconnected.
    const Mat& grad(int i) {
        ensure_grad(i);
        return nodes_[i].grad;
    }

    void reset() { nodes_.clear(); }
    int size() const { return static_cast<int>(nodes_.size()); }

    // ---- arithmetic -------------------------------------------------------

    int add(int a, int b) {
        const Mat& va = value(a);
        const Mat& vb = value(b);
        if (!va.same_shape(vb)) throw std::invalid_argument("tape add: shape mismatch");
        Mat out = va;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += vb.v[i];
        return push(std::move(out), [a, b](Tape& t, int self) {
            t.accumulate(a, t.nodes_[self].grad);
            t.accumulate(b, t.nodes_[self].grad);
        });
    }

    int scale(int a, T s) {
        Mat out = value(a);
        for (auto& x : out.v) x *= s;
        return push(std::move(out), [a, s](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            Mat& ga = t.ensure_grad(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += s * g.v[i];
        });
    }

    /// a (m×n) + bias (1×n) broadcast over rows.
    int add_row_broadcast(int a, int bias) {
        const Mat& va = value(a);
        const Mat& vb = value(bias);
        if (vb.rows != 1 || vb.cols != va.cols)
            throw std::invalid_argument("tape add_row_broadcast: bias must be 1×cols");
        Mat out = va;
        for (int r = 0; r < out.rows; ++r)
            for (int c = 0; c < out.cols; ++c) out.at(r, c) += vb.at(0, c);
        return push(std::move(out), [a, bias](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            t.accumulate(a, g);
            Mat& gb = t.ensure_grad(bias);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) gb.at(0, c) += g.at(r, c);
        });
    }

    /// Elementwise product with a constant mask (dropout etc.).
    int mul_mask(int a, Mat mask) {
        const Mat& va = value(a);
        if (!va.same_shape(mask)) throw std::invalid_argument("tape mul_mask: shape mismatch");
        Mat out = va;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= mask.v[i];
        auto m = std::make_shared<Mat>(std::move(mask));
        return push(std::move(out), [a, m](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            Mat& ga = t.ensure_grad(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * m->v[i];
        });
    }

    // ---- matrix products --------------------------------------------------

    int matmul(int a, int b) {
        const Mat& va = value(a);
        const Mat& vb = value(b);
        if (va.cols != vb.rows) throw std::invalid_argument("tape matmul: shape mismatch");
        Mat out(va.rows, vb.cols);
        gemm_nn(va.v.data(), vb.v.data(), out.v.data(), va.rows, va.cols, vb.cols);
        return push(std::move(out), [a, b](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& va = t.value(a);
            const Mat& vb = t.value(b);
            Mat& ga = t.ensure_grad(a);  // dA += dC · Bᵀ
            gemm_nt(g.v.data(), vb.v.data(), ga.v.data(), g.rows, g.cols, va.cols);
            Mat& gb = t.ensure_grad(b);  // dB += Aᵀ · dC
            gemm_tn(va.v.data(), g.v.data(), gb.v.data(), vb.rows, va.rows, g.cols);
        });
    }

    /// a (m×k) · b (n×k)ᵀ -> m×n
    int matmul_nt(int a, int b) {
        const Mat& va = value(a);
        const Mat& vb = value(b);
        if (va.cols != vb.cols) throw std::invalid_argument("tape matmul_nt: shape mismatch");
        Mat out(va.rows, vb.rows);
        gemm_nt(va.v.data(), vb.v.data(), out.v.data(), va.rows, va.cols, vb.rows);
        return push(std::move(out), [a, b](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& va = t.value(a);
            const Mat& vb = t.value(b);
            Mat& ga = t.ensure_grad(a);  // dA += dC · B
            gemm_nn(g.v.data(), vb.v.data(), ga.v.data(), g.rows, vb.rows, vb.cols);
            Mat& gb = t.ensure_grad(b);  // dB += dCᵀ · A
            gemm_tn(g.v.data(), va.v.data(), gb.v.data(), g.cols, g.rows, va.cols);
        });
    }

    // ---- shape plumbing ----------------------------------------------------

    int col_slice(int a, int c0, int c1) {
        const Mat& va = value(a);
        if (c0 < 0 || c1 > va.cols || c0 >= c1)
            throw std::invalid_argument("tape col_slice: bad column range");
        Mat out(va.rows, c1 - c0);
        for (int r = 0; r < va.rows; ++r)
            for (int c = c0; c < c1; ++c) out.at(r, c - c0) = va.at(r, c);
        return push(std::move(out), [a, c0](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            Mat& ga = t.ensure_grad(a);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) ga.at(r, c0 + c) += g.at(r, c);
        });
    }

    int col_concat(const std::vector<int>& parts) {
        int rows = value(parts.at(0)).rows;
        int cols = 0;
        for (int p : parts) {
            if (value(p).rows != rows)
                throw std::invalid_argument("tape col_concat: row mismatch");
            cols += value(p).cols;
        }
        Mat out(rows, cols);
        int off = 0;
        for (int p : parts) {
            const Mat& vp = value(p);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < vp.cols; ++c) out.at(r, off + c) = vp.at(r, c);
            off += vp.cols;
        }
        auto ps = parts;
        return push(std::move(out), [ps](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            int off = 0;
            for (int p : ps) {
                Mat& gp = t.ensure_grad(p);
                for (int r = 0; r < gp.rows; ++r)
                    for (int c = 0; c < gp.cols; ++c) gp.at(r, c) += g.at(r, off + c);
                off += gp.cols;
            }
        });
    }

    int row_concat(const std::vector<int>& parts) {
        int cols = value(parts.at(0)).cols;
        int rows = 0;
        for (int p : parts) {
            if (value(p).cols != cols)
                throw std::invalid_argument("tape row_concat: column mismatch");
            rows += value(p).rows;
        }
        Mat out(rows, cols);
        int off = 0;
        for (int p : parts) {
            const Mat& vp = value(p);
            for (int r = 0; r < vp.rows; ++r)
                for (int c = 0; c < cols; ++c) out.at(off + r, c) = vp.at(r, c);
            off += vp.rows;
        }
        auto ps = parts;
        return push(std::move(out), [ps](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            int off = 0;
            for (int p : ps) {
                Mat& gp = t.ensure_grad(p);
                for (int r = 0; r < gp.rows; ++r)
                    for (int c = 0; c < gp.cols; ++c) gp.at(r, c) += g.at(off + r, c);
                off += gp.rows;
            }
        });
    }

    /// 1×n mean over rows.
    int mean_rows(int a) {
        const Mat& va = value(a);
        Mat out(1, va.cols);
        for (int r = 0; r < va.rows; ++r)
            for (int c = 0; c < va.cols; ++c) out.at(0, c) += va.at(r, c);
        for (auto& x : out.v) x /= static_cast<T>(va.rows);
        const int rows = va.rows;
        return push(std::move(out), [a, rows](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            Mat& ga = t.ensure_grad(a);
            const T inv = T(1) / static_cast<T>(rows);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < g.cols; ++c) ga.at(r, c) += g.at(0, c) * inv;
        });
    }

    /// Row gather: out[i] = table[ids[i]].
    int embedding(int table, std::vector<int> ids) {
        const Mat& tb = value(table);
        for (int id : ids)
            if (id < 0 || id >= tb.rows)
                throw std::invalid_argument("tape embedding: id out of range");
        Mat out(static_cast<int>(ids.size()), tb.cols);
        for (size_t i = 0; i < ids.size(); ++i)
            for (int c = 0; c < tb.cols; ++c) out.at(static_cast<int>(i), c) = tb.at(ids[i], c);
        return push(std::move(out), [table, ids](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            Mat& gt = t.ensure_grad(table);
            for (size_t i = 0; i < ids.size(); ++i)
                for (int c = 0; c < g.cols; ++c)
                    gt.at(ids[i], c) += g.at(static_cast<int>(i), c);
        });
    }

    // ---- nonlinearities ----------------------------------------------------

    int gelu(int a) {
        const Mat& va = value(a);
        Mat out = va;
        for (auto& x : out.v) x = gelu_fwd(x);
        return push(std::move(out), [a](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& va = t.value(a);
            Mat& ga = t.ensure_grad(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * gelu_bwd(va.v[i]);
        });
    }

    /// Row-wise layer norm with per-feature gain and bias (both 1×n).
    int layer_norm(int x, int gain, int bias, T eps = T(1e-5)) {
        const Mat& vx = value(x);
        const Mat& vg = value(gain);
        const Mat& vb = value(bias);
        if (vg.rows != 1 || vg.cols != vx.cols || vb.rows != 1 || vb.cols != vx.cols)
            throw std::invalid_argument("tape layer_norm: gain/bias must be 1×cols");
        const int n = vx.cols;
        Mat out(vx.rows, n);
        auto inv_std = std::make_shared<std::vector<T>>(vx.rows);
        auto means = std::make_shared<std::vector<T>>(vx.rows);
        for (int r = 0; r < vx.rows; ++r) {
            double mu = 0.0;
            for (int c = 0; c < n; ++c) mu += vx.at(r, c);
            mu /= n;
            double var = 0.0;
            for (int c = 0; c < n; ++c) {
                double d = vx.at(r, c) - mu;
                var += d * d;
            }
            var /= n;
            const T istd = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
            (*means)[r] = static_cast<T>(mu);
            (*inv_std)[r] = istd;
            for (int c = 0; c < n; ++c)
                out.at(r, c) = (vx.at(r, c) - static_cast<T>(mu)) * istd * vg.at(0, c) + vb.at(0, c);
        }
        return push(std::move(out), [x, gain, bias, means, inv_std](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& vx = t.value(x);
            const Mat& vg = t.value(gain);
            const int n = vx.cols;
            Mat& gx = t.ensure_grad(x);
            Mat& gg = t.ensure_grad(gain);
            Mat& gb = t.ensure_grad(bias);
            for (int r = 0; r < vx.rows; ++r) {
                const T istd = (*inv_std)[r];
                const T mu = (*means)[r];
                // dy/dxhat then fold mean/var terms
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (int c = 0; c < n; ++c) {
                    const T xhat = (vx.at(r, c) - mu) * istd;
                    const T dxhat = g.at(r, c) * vg.at(0, c);
                    gg.at(0, c) += g.at(r, c) * xhat;
                    gb.at(0, c) += g.at(r, c);
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += static_cast<double>(dxhat) * xhat;
                }
                for (int c = 0; c < n; ++c) {
                    const T xhat = (vx.at(r, c) - mu) * istd;
                    const T dxhat = g.at(r, c) * vg.at(0, c);
                    gx.at(r, c) += istd * (dxhat - static_cast<T>(sum_dxhat / n) -
                                           xhat * static_cast<T>(sum_dxhat_xhat / n));
                }
            }
        });
    }

    /// Rows scaled to unit L2 norm.
    int l2_normalize_rows(int a) {
        const Mat& va = value(a);
        Mat out = va;
        auto norms = std::make_shared<std::vector<T>>(va.rows);
        for (int r = 0; r < va.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < va.cols; ++c) s += static_cast<double>(va.at(r, c)) * va.at(r, c);
            const T norm = static_cast<T>(std::sqrt(s + 1e-24));
            (*norms)[r] = norm;
            for (int c = 0; c < va.cols; ++c) out.at(r, c) /= norm;
        }
        return push(std::move(out), [a, norms](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& y = t.value(self);
            Mat& ga = t.ensure_grad(a);
            for (int r = 0; r < g.rows; ++r) {
                double gy = 0.0;
                for (int c = 0; c < g.cols; ++c) gy += static_cast<double>(g.at(r, c)) * y.at(r, c);
                const T inv = T(1) / (*norms)[r];
                for (int c = 0; c < g.cols; ++c)
                    ga.at(r, c) += (g.at(r, c) - static_cast<T>(gy) * y.at(r, c)) * inv;
            }
        });
    }

    /// Square score matrix; row i is softmaxed over columns 0..i, the rest of
    /// the row is exactly zero, which keeps positions > t out of the sum
    /// bit-for-bit.
    int softmax_causal(int a) {
        const Mat& va = value(a);
        if (va.rows != va.cols) throw std::invalid_argument("tape softmax_causal: matrix not square");
        const int n = va.rows;
        Mat out(n, n);
        for (int r = 0; r < n; ++r) {
            T mx = va.at(r, 0);
            for (int c = 1; c <= r; ++c) mx = std::max(mx, va.at(r, c));
            double denom = 0.0;
            for (int c = 0; c <= r; ++c) {
                const T e = std::exp(va.at(r, c) - mx);
                out.at(r, c) = e;
                denom += e;
            }
            for (int c = 0; c <= r; ++c) out.at(r, c) = static_cast<T>(out.at(r, c) / denom);
        }
        return push(std::move(out), [a](Tape& t, int self) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& p = t.value(self);
            Mat& ga = t.ensure_grad(a);
            for (int r = 0; r < p.rows; ++r) {
                double dot = 0.0;
                for (int c = 0; c <= r; ++c) dot += static_cast<double>(g.at(r, c)) * p.at(r, c);
                for (int c = 0; c <= r; ++c)
                    ga.at(r, c) += p.at(r, c) * (g.at(r, c) - static_cast<T>(dot));
            }
        });
    }

    // ---- losses (scalar 1×1 nodes, double accumulation) ---------------------

    /// Sum over rows r in [loss_from, end) of -log softmax(logits_r)[target_r].
    /// ban_diagonal excludes column r from row r's softmax (contrastive use).
    int cross_entropy_sum(int logits, std::vector<int> targets, int loss_from = 0,
                          bool ban_diagonal = false) {
        const Mat& vl = value(logits);
        if (static_cast<int>(targets.size()) != vl.rows)
            throw std::invalid_argument("tape cross_entropy_sum: one target per row required");
        auto probs = std::make_shared<Mat>(vl.rows, vl.cols);
        double loss = 0.0;
        for (int r = loss_from; r < vl.rows; ++r) {
            if (targets[r] < 0 || targets[r] >= vl.cols || (ban_diagonal && targets[r] == r))
                throw std::invalid_argument("tape cross_entropy_sum: target out of range");
            double mx = -1e300;
            for (int c = 0; c < vl.cols; ++c) {
                if (ban_diagonal && c == r) continue;
                mx = std::max(mx, static_cast<double>(vl.at(r, c)));
            }
            double denom = 0.0;
            for (int c = 0; c < vl.cols; ++c) {
                if (ban_diagonal && c == r) continue;
                denom += std::exp(static_cast<double>(vl.at(r, c)) - mx);
            }
            for (int c = 0; c < vl.cols; ++c) {
                probs->at(r, c) = (ban_diagonal && c == r)
                                      ? T(0)
                                      : static_cast<T>(std::exp(static_cast<double>(vl.at(r, c)) - mx) / denom);
            }
            loss += -(static_cast<double>(vl.at(r, targets[r])) - mx - std::log(denom));
        }
        Mat out(1, 1);
        out.at(0, 0) = static_cast<T>(loss);
        return push(std::move(out), [logits, targets, loss_from, probs](Tape& t, int self) {
            const T gs = t.nodes_[self].grad.at(0, 0);
            Mat& gl = t.ensure_grad(logits);
            for (int r = loss_from; r < gl.rows; ++r) {
                for (int c = 0; c < gl.cols; ++c) gl.at(r, c) += gs * probs->at(r, c);
                gl.at(r, targets[r]) -= gs;
            }
        });
    }

    /// Sum of squared differences to a constant target.
    int mse_sum(int a, Mat target) {
        const Mat& va = value(a);
        if (!va.same_shape(target)) throw std::invalid_argument("tape mse_sum: shape mismatch");
        double s = 0.0;
        for (size_t i = 0; i < va.v.size(); ++i) {
            const double d = static_cast<double>(va.v[i]) - target.v[i];
            s += d * d;
        }
        Mat out(1, 1);
        out.at(0, 0) = static_cast<T>(s);
        auto tg = std::make_shared<Mat>(std::move(target));
        return push(std::move(out), [a, tg](Tape& t, int self) {
            const T gs = t.nodes_[self].grad.at(0, 0);
            const Mat& va = t.value(a);
            Mat& ga = t.ensure_grad(a);
            for (size_t i = 0; i < va.v.size(); ++i)
                ga.v[i] += gs * T(2) * (va.v[i] - tg->v[i]);
        });
    }

    /// Σ a ⊙ w as a 1×1 node (fixed-weight scalar probe).
    int weighted_sum(int a, Mat w) {
        const Mat& va = value(a);
        if (!va.same_shape(w)) throw std::invalid_argument("tape weighted_sum: shape mismatch");
        double s = 0.0;
        for (size_t i = 0; i < va.v.size(); ++i) s += static_cast<double>(va.v[i]) * w.v[i];
        Mat out(1, 1);
        out.at(0, 0) = static_cast<T>(s);
        auto wm = std::make_shared<Mat>(std::move(w));
        return push(std::move(out), [a, wm](Tape& t, int self) {
            const T gs = t.nodes_[self].grad.at(0, 0);
            Mat& ga = t.ensure_grad(a);
            for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += gs * wm->v[i];
        });
    }

    int add_scalars(const std::vector<int>& parts) {
        double s = 0.0;
        for (int p : parts) {
            const Mat& vp = value(p);
            if (vp.rows != 1 || vp.cols != 1)
                throw std::invalid_argument("tape add_scalars: all parts must be 1×1");
            s += vp.at(0, 0);
        }
        Mat out(1, 1);
        out.at(0, 0) = static_cast<T>(s);
        auto ps = parts;
        return push(std::move(out), [ps](Tape& t, int self) {
            const T gs = t.nodes_[self].grad.at(0, 0);
            for (int p : ps) t.ensure_grad(p).at(0, 0) += gs;
        });
    }

    // ---- backward -----------------------------------------------------------

    void backward(int loss) {
        const Mat& vl = value(loss);
        if (vl.rows != 1 || vl.cols != 1)
            throw std::invalid_argument("tape backward: loss must be a scalar node");
        ensure_grad(loss).at(0, 0) = T(1);
        for (int i = loss; i >= 0; --i) {
            if (nodes_[i].has_grad && nodes_[i].back) nodes_[i].back(*this, i);
        }
    }

private:
    struct Node {
        Mat val;
        std::function<void(Tape&, int)> back;  // null for leaves
        Mat grad;
        bool has_grad = false;
    };

    static T gelu_fwd(T x) {
        const double xd = static_cast<double>(x);
        const double c = 0.7978845608028654;  // sqrt(2/pi)
        return static_cast<T>(0.5 * xd * (1.0 + std::tanh(c * (xd + 0.044715 * xd * xd * xd))));
    }

    static T gelu_bwd(T x) {
        const double xd = static_cast<double>(x);
        const double c = 0.7978845608028654;
        const double u = c * (xd + 0.044715 * xd * xd * xd);
        const double th = std::tanh(u);
        const double sech2 = 1.0 - th * th;
        return static_cast<T>(0.5 * (1.0 + th) + 0.5 * xd * sech2 * c * (1.0 + 3.0 * 0.044715 * xd * xd));
    }

    int push(Mat val, std::function<void(Tape&, int)> back) {
        nodes_.push_back(Node{std::move(val), std::move(back), Mat{}, false});
        return static_cast<int>(nodes_.size()) - 1;
    }

    Mat& ensure_grad(int i) {
        Node& n = nodes_[i];
        if (!n.has_grad) {
            n.grad = Mat(n.val.rows, n.val.cols);
            n.has_grad = true;
        }
        return n.grad;
    }

    void accumulate(int i, const Mat& g) {
        Mat& gi = ensure_grad(i);
        for (size_t k = 0; k < gi.v.size(); ++k) gi.v[k] += g.v[k];
    }

    std::vector<Node> nodes_;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace digit

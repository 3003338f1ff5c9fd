#include "cfx/graph.hpp"

#include <Eigen/Core>
#include <cmath>

#include "cfx/errors.hpp"

namespace cfx {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

Value make_leaf(Tensor t, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    n->requires_grad = requires_grad;
    return n;
}

Value make_constant(Tensor t) { return make_leaf(std::move(t), false); }

void ensure_grad(Node& n) {
    if (n.grad.numel() != n.val.numel()) n.grad = Tensor::zeros(n.val.shape());
}

namespace {

Value make_op(Tensor val, std::vector<Value> parents, std::function<void(Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    for (auto& p : parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward = std::move(bw);
    }
    return n;
}

void check_same_shape(const Value& a, const Value& b, const char* op) {
    if (!a->val.same_shape(b->val))
        throw ContractError(std::string(op) + ": shape mismatch " + a->val.shape_str() + " vs " +
                            b->val.shape_str());
}

}  // namespace

void backward(const Value& root) {
    if (root->val.numel() != 1) throw ContractError("backward: root must be scalar");
    // Iterative topological sort.
    std::vector<Node*> order;
    std::vector<std::pair<Node*, size_t>> stack;
    static int mark_counter = 0;
    int mark = ++mark_counter;
    stack.push_back({root.get(), 0});
    root->visit_mark = mark;
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx++].get();
            if (p->visit_mark != mark && p->requires_grad) {
                p->visit_mark = mark;
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    ensure_grad(*root);
    root->grad.fill(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward) n->backward(*n);
    }
}

void zero_grad(const std::vector<Value>& leaves) {
    for (auto& l : leaves)
        if (l->grad.numel()) l->grad.fill(0.0);
}

// ---- elementwise ----

Value add(const Value& a, const Value& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] += b->val[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            ensure_grad(*a);
            for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
        }
        if (b->requires_grad) {
            ensure_grad(*b);
            for (size_t i = 0; i < n.grad.numel(); ++i) b->grad[i] += n.grad[i];
        }
    });
}

Value sub(const Value& a, const Value& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] -= b->val[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            ensure_grad(*a);
            for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
        }
        if (b->requires_grad) {
            ensure_grad(*b);
            for (size_t i = 0; i < n.grad.numel(); ++i) b->grad[i] -= n.grad[i];
        }
    });
}

Value mul(const Value& a, const Value& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] *= b->val[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            ensure_grad(*a);
            for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i] * b->val[i];
        }
        if (b->requires_grad) {
            ensure_grad(*b);
            for (size_t i = 0; i < n.grad.numel(); ++i) b->grad[i] += n.grad[i] * a->val[i];
        }
    });
}

Value divv(const Value& a, const Value& b) {
    check_same_shape(a, b, "div");
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] /= b->val[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            ensure_grad(*a);
            for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i] / b->val[i];
        }
        if (b->requires_grad) {
            ensure_grad(*b);
            for (size_t i = 0; i < n.grad.numel(); ++i)
                b->grad[i] -= n.grad[i] * a->val[i] / (b->val[i] * b->val[i]);
        }
    });
}

Value neg(const Value& a) { return mul_scalar(a, -1.0); }

Value add_scalar(const Value& a, double c) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] += c;
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
    });
}

Value mul_scalar(const Value& a, double c) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    return make_op(std::move(out), {a}, [a, c](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += c * n.grad[i];
    });
}

Value relu(const Value& a) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i)
            if (a->val[i] > 0.0) a->grad[i] += n.grad[i];
    });
}

Value leaky_relu(const Value& a, double slope) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : slope * out[i];
    return make_op(std::move(out), {a}, [a, slope](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i)
            a->grad[i] += (a->val[i] > 0.0 ? 1.0 : slope) * n.grad[i];
    });
}

Value sigmoid(const Value& a) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    auto res = make_op(std::move(out), {a}, nullptr);
    if (res->requires_grad) {
        auto self = res.get();
        res->backward = [a, self](Node& n) {
            ensure_grad(*a);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                double s = self->val[i];
                a->grad[i] += n.grad[i] * s * (1.0 - s);
            }
        };
    }
    return res;
}

Value silu(const Value& a) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-out[i]));
        out[i] = out[i] * s;
    }
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) {
            double x = a->val[i];
            double s = 1.0 / (1.0 + std::exp(-x));
            a->grad[i] += n.grad[i] * (s + x * s * (1.0 - s));
        }
    });
}

Value exp_op(const Value& a) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = std::exp(out[i]);
    auto res = make_op(std::move(out), {a}, nullptr);
    if (res->requires_grad) {
        auto self = res.get();
        res->backward = [a, self](Node& n) {
            ensure_grad(*a);
            for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i] * self->val[i];
        };
    }
    return res;
}

Value log_op(const Value& a) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = std::log(out[i]);
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i] / a->val[i];
    });
}

Value abs_op(const Value& a) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = std::fabs(out[i]);
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) {
            double x = a->val[i];
            if (x > 0.0)
                a->grad[i] += n.grad[i];
            else if (x < 0.0)
                a->grad[i] -= n.grad[i];
        }
    });
}

Value clamp_op(const Value& a, double lo, double hi) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = std::min(hi, std::max(lo, out[i]));
    return make_op(std::move(out), {a}, [a, lo, hi](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) {
            double x = a->val[i];
            if (x > lo && x < hi) a->grad[i] += n.grad[i];
        }
    });
}

Value pow_scalar(const Value& a, double p) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = std::pow(out[i], p);
    return make_op(std::move(out), {a}, [a, p](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i)
            a->grad[i] += n.grad[i] * p * std::pow(a->val[i], p - 1.0);
    });
}

// ---- reductions / broadcasts ----

Value sum_all(const Value& a) {
    Tensor out = Tensor::scalar(a->val.sum());
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        double g = n.grad[0];
        for (size_t i = 0; i < a->grad.numel(); ++i) a->grad[i] += g;
    });
}

Value mean_all(const Value& a) { return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a->val.numel())); }

Value dot_const(const Value& a, const Tensor& w) {
    if (!a->val.same_shape(w)) throw ContractError("dot_const: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < w.numel(); ++i) s += a->val[i] * w[i];
    return make_op(Tensor::scalar(s), {a}, [a, w](Node& n) {
        ensure_grad(*a);
        double g = n.grad[0];
        for (size_t i = 0; i < w.numel(); ++i) a->grad[i] += g * w[i];
    });
}

Value mean_hw(const Value& a) {
    int c = a->val.dim(0), h = a->val.dim(1), w = a->val.dim(2);
    double inv = 1.0 / (static_cast<double>(h) * w);
    Tensor out({c});
    for (int ci = 0; ci < c; ++ci) {
        double s = 0.0;
        const double* p = a->val.data() + static_cast<size_t>(ci) * h * w;
        for (int i = 0; i < h * w; ++i) s += p[i];
        out[static_cast<size_t>(ci)] = s * inv;
    }
    return make_op(std::move(out), {a}, [a, c, h, w, inv](Node& n) {
        ensure_grad(*a);
        for (int ci = 0; ci < c; ++ci) {
            double g = n.grad[static_cast<size_t>(ci)] * inv;
            double* p = a->grad.data() + static_cast<size_t>(ci) * h * w;
            for (int i = 0; i < h * w; ++i) p[i] += g;
        }
    });
}

Value bcast_hw(const Value& a, int h, int w) {
    int c = a->val.dim(0);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci) {
        double v = a->val[static_cast<size_t>(ci)];
        double* p = out.data() + static_cast<size_t>(ci) * h * w;
        for (int i = 0; i < h * w; ++i) p[i] = v;
    }
    return make_op(std::move(out), {a}, [a, c, h, w](Node& n) {
        ensure_grad(*a);
        for (int ci = 0; ci < c; ++ci) {
            const double* p = n.grad.data() + static_cast<size_t>(ci) * h * w;
            double s = 0.0;
            for (int i = 0; i < h * w; ++i) s += p[i];
            a->grad[static_cast<size_t>(ci)] += s;
        }
    });
}

Value mul_mask(const Value& a, const Tensor& mask_hw) {
    int c = a->val.dim(0), h = a->val.dim(1), w = a->val.dim(2);
    if (mask_hw.dim(0) != h || mask_hw.dim(1) != w) throw ContractError("mul_mask: mask shape mismatch");
    Tensor out = a->val;
    for (int ci = 0; ci < c; ++ci) {
        double* p = out.data() + static_cast<size_t>(ci) * h * w;
        for (int i = 0; i < h * w; ++i) p[i] *= mask_hw[static_cast<size_t>(i)];
    }
    return make_op(std::move(out), {a}, [a, mask_hw, c, h, w](Node& n) {
        ensure_grad(*a);
        for (int ci = 0; ci < c; ++ci) {
            const double* g = n.grad.data() + static_cast<size_t>(ci) * h * w;
            double* p = a->grad.data() + static_cast<size_t>(ci) * h * w;
            for (int i = 0; i < h * w; ++i) p[i] += g[i] * mask_hw[static_cast<size_t>(i)];
        }
    });
}

Value add_bias_masked(const Value& a, const Value& bias, const Tensor& mask_hw) {
    int c = a->val.dim(0), h = a->val.dim(1), w = a->val.dim(2);
    Tensor out = a->val;
    for (int ci = 0; ci < c; ++ci) {
        double b = bias->val[static_cast<size_t>(ci)];
        double* p = out.data() + static_cast<size_t>(ci) * h * w;
        for (int i = 0; i < h * w; ++i) p[i] += b * mask_hw[static_cast<size_t>(i)];
    }
    return make_op(std::move(out), {a, bias}, [a, bias, mask_hw, c, h, w](Node& n) {
        if (a->requires_grad) {
            ensure_grad(*a);
            for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
        }
        if (bias->requires_grad) {
            ensure_grad(*bias);
            for (int ci = 0; ci < c; ++ci) {
                const double* g = n.grad.data() + static_cast<size_t>(ci) * h * w;
                double s = 0.0;
                for (int i = 0; i < h * w; ++i) s += g[i] * mask_hw[static_cast<size_t>(i)];
                bias->grad[static_cast<size_t>(ci)] += s;
            }
        }
    });
}

// ---- linear algebra / structure ----

Value affine(const Value& x, const Value& w, const Value& b) {
    int m = w->val.dim(0), k = w->val.dim(1);
    if (x->val.ndim() != 1 || x->val.dim(0) != k || b->val.dim(0) != m)
        throw ContractError("affine: shape mismatch");
    Tensor out({m});
    CMapM W(w->val.data(), m, k);
    Eigen::Map<const Eigen::VectorXd> X(x->val.data(), k);
    Eigen::Map<Eigen::VectorXd> O(out.data(), m);
    O = W * X;
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)] += b->val[static_cast<size_t>(i)];
    return make_op(std::move(out), {x, w, b}, [x, w, b, m, k](Node& n) {
        Eigen::Map<const Eigen::VectorXd> G(n.grad.data(), m);
        if (x->requires_grad) {
            ensure_grad(*x);
            CMapM W(w->val.data(), m, k);
            Eigen::Map<Eigen::VectorXd> GX(x->grad.data(), k);
            GX += W.transpose() * G;
        }
        if (w->requires_grad) {
            ensure_grad(*w);
            Eigen::Map<const Eigen::VectorXd> X(x->val.data(), k);
            MapM GW(w->grad.data(), m, k);
            GW += G * X.transpose();
        }
        if (b->requires_grad) {
            ensure_grad(*b);
            for (int i = 0; i < m; ++i) b->grad[static_cast<size_t>(i)] += n.grad[static_cast<size_t>(i)];
        }
    });
}

Value matmul_nt(const Value& a, const Value& b) {
    int m = a->val.dim(0), k = a->val.dim(1), nn = b->val.dim(0);
    if (b->val.dim(1) != k) throw ContractError("matmul_nt: inner dim mismatch");
    Tensor out({m, nn});
    CMapM A(a->val.data(), m, k);
    CMapM B(b->val.data(), nn, k);
    MapM O(out.data(), m, nn);
    O = A * B.transpose();
    return make_op(std::move(out), {a, b}, [a, b, m, k, nn](Node& n) {
        CMapM G(n.grad.data(), m, nn);
        if (a->requires_grad) {
            ensure_grad(*a);
            CMapM B(b->val.data(), nn, k);
            MapM GA(a->grad.data(), m, k);
            GA += G * B;
        }
        if (b->requires_grad) {
            ensure_grad(*b);
            CMapM A(a->val.data(), m, k);
            MapM GB(b->grad.data(), nn, k);
            GB += G.transpose() * A;
        }
    });
}

Value reshape(const Value& a, std::vector<int> shape) {
    if (shape_numel(shape) != a->val.numel()) throw ContractError("reshape: numel mismatch");
    Tensor out(std::move(shape));
    for (size_t i = 0; i < out.numel(); ++i) out[i] = a->val[i];
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
    });
}

Value concat_c(const Value& a, const Value& b) {
    int ca = a->val.dim(0), cb = b->val.dim(0);
    int h = a->val.dim(1), w = a->val.dim(2);
    if (b->val.dim(1) != h || b->val.dim(2) != w) throw ContractError("concat_c: spatial mismatch");
    Tensor out({ca + cb, h, w});
    size_t na = a->val.numel();
    for (size_t i = 0; i < na; ++i) out[i] = a->val[i];
    for (size_t i = 0; i < b->val.numel(); ++i) out[na + i] = b->val[i];
    return make_op(std::move(out), {a, b}, [a, b, na](Node& n) {
        if (a->requires_grad) {
            ensure_grad(*a);
            for (size_t i = 0; i < na; ++i) a->grad[i] += n.grad[i];
        }
        if (b->requires_grad) {
            ensure_grad(*b);
            for (size_t i = 0; i < b->grad.numel(); ++i) b->grad[i] += n.grad[na + i];
        }
    });
}

Value upsample_nearest2(const Value& a) {
    int c = a->val.dim(0), h = a->val.dim(1), w = a->val.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double v = a->val.at(ci, i, j);
                out.at(ci, 2 * i, 2 * j) = v;
                out.at(ci, 2 * i, 2 * j + 1) = v;
                out.at(ci, 2 * i + 1, 2 * j) = v;
                out.at(ci, 2 * i + 1, 2 * j + 1) = v;
            }
    return make_op(std::move(out), {a}, [a, c, h, w](Node& n) {
        ensure_grad(*a);
        for (int ci = 0; ci < c; ++ci)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j)
                    a->grad.at(ci, i, j) += n.grad.at(ci, 2 * i, 2 * j) + n.grad.at(ci, 2 * i, 2 * j + 1) +
                                            n.grad.at(ci, 2 * i + 1, 2 * j) + n.grad.at(ci, 2 * i + 1, 2 * j + 1);
    });
}

namespace {

// im2col: (C,H,W) -> (C*kh*kw, OH*OW), zero padded.
void im2col(const Tensor& x, int kh, int kw, int stride, int pad, int oh, int ow, Tensor& col) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    for (int ci = 0; ci < c; ++ci)
        for (int u = 0; u < kh; ++u)
            for (int v = 0; v < kw; ++v) {
                size_t row = (static_cast<size_t>(ci) * kh + u) * kw + v;
                double* dst = col.data() + row * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + u - pad;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + v - pad;
                        dst[oy * ow + ox] =
                            (iy >= 0 && iy < h && ix >= 0 && ix < w) ? x.at(ci, iy, ix) : 0.0;
                    }
                }
            }
}

void col2im_add(const Tensor& col, int kh, int kw, int stride, int pad, int oh, int ow, Tensor& dx) {
    int c = dx.dim(0), h = dx.dim(1), w = dx.dim(2);
    for (int ci = 0; ci < c; ++ci)
        for (int u = 0; u < kh; ++u)
            for (int v = 0; v < kw; ++v) {
                size_t row = (static_cast<size_t>(ci) * kh + u) * kw + v;
                const double* src = col.data() + row * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + u - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + v - pad;
                        if (ix >= 0 && ix < w) dx.at(ci, iy, ix) += src[oy * ow + ox];
                    }
                }
            }
}

}  // namespace

Value conv2d_nobias(const Value& x, const Value& w, int stride, int pad) {
    int c = x->val.dim(0), h = x->val.dim(1), ww = x->val.dim(2);
    int o = w->val.dim(0), kc = w->val.dim(1), kh = w->val.dim(2), kw = w->val.dim(3);
    if (kc != c) throw ContractError("conv2d: channel mismatch");
    int oh = (h + 2 * pad - kh) / stride + 1;
    int ow = (ww + 2 * pad - kw) / stride + 1;
    auto col = std::make_shared<Tensor>(std::vector<int>{c * kh * kw, oh * ow});
    im2col(x->val, kh, kw, stride, pad, oh, ow, *col);
    Tensor out({o, oh, ow});
    {
        CMapM W(w->val.data(), o, c * kh * kw);
        CMapM Col(col->data(), c * kh * kw, oh * ow);
        MapM O(out.data(), o, oh * ow);
        O = W * Col;
    }
    return make_op(std::move(out), {x, w}, [x, w, col, o, c, kh, kw, stride, pad, oh, ow](Node& n) {
        CMapM G(n.grad.data(), o, oh * ow);
        if (w->requires_grad) {
            ensure_grad(*w);
            CMapM Col(col->data(), c * kh * kw, oh * ow);
            MapM GW(w->grad.data(), o, c * kh * kw);
            GW += G * Col.transpose();
        }
        if (x->requires_grad) {
            ensure_grad(*x);
            Tensor dcol({c * kh * kw, oh * ow});
            CMapM W(w->val.data(), o, c * kh * kw);
            MapM DC(dcol.data(), c * kh * kw, oh * ow);
            DC = W.transpose() * G;
            col2im_add(dcol, kh, kw, stride, pad, oh, ow, x->grad);
        }
    });
}

Value conv2d(const Value& x, const Value& w, const Value& b, int stride, int pad) {
    Value z = conv2d_nobias(x, w, stride, pad);
    int o = z->val.dim(0), oh = z->val.dim(1), ow = z->val.dim(2);
    return add(z, bcast_hw(reshape(b, {o}), oh, ow));
}

// ---- special ----

Value binarize_ge(const Value& a, double t, bool straight_through) {
    Tensor out = a->val;
    for (size_t i = 0; i < out.numel(); ++i) out[i] = out[i] >= t ? 1.0 : 0.0;
    if (!straight_through) return make_constant(std::move(out));
    return make_op(std::move(out), {a}, [a](Node& n) {
        ensure_grad(*a);
        for (size_t i = 0; i < n.grad.numel(); ++i) a->grad[i] += n.grad[i];
    });
}

namespace {

// 1-D correlation along rows then columns with symmetric kernel, zero pad.
Tensor sep_apply(const Tensor& x, const std::vector<double>& k) {
    int h = x.dim(0), w = x.dim(1);
    int r = static_cast<int>(k.size()) / 2;
    Tensor tmp({h, w});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double s = 0.0;
            for (int d = -r; d <= r; ++d) {
                int jj = j + d;
                if (jj >= 0 && jj < w) s += k[static_cast<size_t>(d + r)] * x.at(i, jj);
            }
            tmp.at(i, j) = s;
        }
    Tensor out({h, w});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double s = 0.0;
            for (int d = -r; d <= r; ++d) {
                int ii = i + d;
                if (ii >= 0 && ii < h) s += k[static_cast<size_t>(d + r)] * tmp.at(ii, j);
            }
            out.at(i, j) = s;
        }
    return out;
}

}  // namespace

Value sep_conv_fixed(const Value& a, const std::vector<double>& k1d) {
    if (a->val.ndim() != 2) throw ContractError("sep_conv_fixed: expects (H,W)");
    if (k1d.size() % 2 == 0) throw ContractError("sep_conv_fixed: kernel must be odd-sized");
    Tensor out = sep_apply(a->val, k1d);
    // Symmetric kernel with zero padding is self-adjoint, so backward is the
    // same correlation applied to the incoming gradient.
    return make_op(std::move(out), {a}, [a, k1d](Node& n) {
        ensure_grad(*a);
        Tensor g = sep_apply(n.grad, k1d);
        for (size_t i = 0; i < g.numel(); ++i) a->grad[i] += g[i];
    });
}

Value tv_weighted(const Value& m, const Tensor& wh, const Tensor& wv) {
    if (m->val.ndim() != 2) throw ContractError("tv_weighted: expects (H,W)");
    int h = m->val.dim(0), w = m->val.dim(1);
    if (wh.dim(0) != h || wh.dim(1) != w - 1 || wv.dim(0) != h - 1 || wv.dim(1) != w)
        throw ContractError("tv_weighted: weight shape mismatch");
    double n_edges = static_cast<double>(h) * (w - 1) + static_cast<double>(h - 1) * w;
    double s = 0.0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j + 1 < w; ++j) s += wh.at(i, j) * std::fabs(m->val.at(i, j + 1) - m->val.at(i, j));
    for (int i = 0; i + 1 < h; ++i)
        for (int j = 0; j < w; ++j) s += wv.at(i, j) * std::fabs(m->val.at(i + 1, j) - m->val.at(i, j));
    s /= n_edges;
    return make_op(Tensor::scalar(s), {m}, [m, wh, wv, h, w, n_edges](Node& n) {
        ensure_grad(*m);
        double g = n.grad[0] / n_edges;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j + 1 < w; ++j) {
                double d = m->val.at(i, j + 1) - m->val.at(i, j);
                double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                double t = g * wh.at(i, j) * sgn;
                m->grad.at(i, j + 1) += t;
                m->grad.at(i, j) -= t;
            }
        for (int i = 0; i + 1 < h; ++i)
            for (int j = 0; j < w; ++j) {
                double d = m->val.at(i + 1, j) - m->val.at(i, j);
                double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                double t = g * wv.at(i, j) * sgn;
                m->grad.at(i + 1, j) += t;
                m->grad.at(i, j) -= t;
            }
    });
}

}  // namespace cfx

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cfx/graph.hpp"

namespace cfx {

// A named trainable tensor. Parameters live as persistent graph leaves; each
// forward pass builds a fresh graph over the same leaves so gradients
// accumulate into them until the optimizer steps.
struct Param {
    std::string name;
    Value v;
};

class ParamStore {
public:
    Value add(const std::string& name, Tensor init, bool trainable = true) {
        params_.push_back({name, make_leaf(std::move(init), trainable)});
        return params_.back().v;
    }
    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }
    std::vector<Value> values() const {
        std::vector<Value> vs;
        vs.reserve(params_.size());
        for (auto& p : params_) vs.push_back(p.v);
        return vs;
    }
    void set_trainable(bool t) {
        for (auto& p : params_) p.v->requires_grad = t;
    }
    uint64_t weight_hash() const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (auto& p : params_) {
            h = fnv1a(p.name.data(), p.name.size(), h);
            h = fnv1a(p.v->val.data(), p.v->val.numel() * sizeof(double), h);
        }
        return h;
    }

private:
    std::vector<Param> params_;
};

class Adam {
public:
    Adam(std::vector<Value> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
        for (auto& p : params_) {
            m_.push_back(Tensor::zeros(p->val.shape()));
            v_.push_back(Tensor::zeros(p->val.shape()));
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(b1_, t_);
        double bc2 = 1.0 - std::pow(b2_, t_);
        for (size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            if (!p->requires_grad || p->grad.numel() == 0) continue;
            for (size_t i = 0; i < p->val.numel(); ++i) {
                double g = p->grad[i];
                m_[k][i] = b1_ * m_[k][i] + (1.0 - b1_) * g;
                v_[k][i] = b2_ * v_[k][i] + (1.0 - b2_) * g * g;
                double mh = m_[k][i] / bc1;
                double vh = v_[k][i] / bc2;
                p->val[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
    }

    void zero_grad() { cfx::zero_grad(params_); }

private:
    std::vector<Value> params_;
    double lr_, b1_, b2_, eps_;
    int64_t t_ = 0;
};

// Channelwise normalization over spatial positions with tracked running
// statistics. Training mode normalizes by the sample's own spatial moments
// (our batches are single images, so this is batch norm at batch size 1);
// eval mode applies the frozen running statistics, which keeps inference
// deterministic and differentiable end to end.
struct Norm2d {
    Value gamma, beta;
    Tensor run_mean, run_var;
    double momentum = 0.1;
    double eps = 1e-5;

    static Norm2d create(ParamStore& ps, const std::string& name, int channels) {
        Norm2d n;
        n.gamma = ps.add(name + ".gamma", Tensor::full({channels}, 1.0));
        n.beta = ps.add(name + ".beta", Tensor::zeros({channels}));
        n.run_mean = Tensor::zeros({channels});
        n.run_var = Tensor::full({channels}, 1.0);
        return n;
    }

    Value forward(const Value& x, bool training) {
        int h = x->val.dim(1), w = x->val.dim(2);
        Value mu, var;
        if (training) {
            mu = mean_hw(x);
            Value xc = sub(x, bcast_hw(mu, h, w));
            var = mean_hw(mul(xc, xc));
            // Track stats outside the graph.
            for (size_t i = 0; i < run_mean.numel(); ++i) {
                run_mean[i] = (1.0 - momentum) * run_mean[i] + momentum * mu->val[i];
                run_var[i] = (1.0 - momentum) * run_var[i] + momentum * var->val[i];
            }
            Value inv = pow_scalar(add_scalar(var, eps), -0.5);
            Value y = mul(xc, bcast_hw(inv, h, w));
            return add(mul(y, bcast_hw(gamma, h, w)), bcast_hw(beta, h, w));
        }
        mu = make_constant(run_mean);
        var = make_constant(run_var);
        Value xc = sub(x, bcast_hw(mu, h, w));
        Value inv = pow_scalar(add_scalar(var, eps), -0.5);
        Value y = mul(xc, bcast_hw(inv, h, w));
        return add(mul(y, bcast_hw(gamma, h, w)), bcast_hw(beta, h, w));
    }
};

// Triangular cyclic learning rate between lr_min and lr_max.
inline double cyclic_lr(int64_t step, int64_t cycle_steps, double lr_min, double lr_max) {
    if (cycle_steps <= 1) return lr_max;
    double phase = static_cast<double>(step % cycle_steps) / static_cast<double>(cycle_steps);
    double tri = phase < 0.5 ? 2.0 * phase : 2.0 * (1.0 - phase);
    return lr_min + (lr_max - lr_min) * tri;
}

inline double he_std(int fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

}  // namespace cfx

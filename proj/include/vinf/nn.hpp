#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vinf/model.hpp"

namespace vinf::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Double-precision copy of a dense model. Row-vector convention:
/// a_l = phi(a_{l-1} W_l + b_l) with W_l of shape d_{l-1} x d_l.
struct DenseNet {
    Architecture arch;
    std::vector<Mat> w;  // w[l-1] for layer l
    std::vector<Vec> b;

    static DenseNet from_model(const Model& m);
    Model to_model() const;

    std::size_t num_layers() const { return w.size(); }
};

/// Activations of every layer; acts[0] is the input.
struct Forward {
    std::vector<Vec> pre;   // pre[l] for layer l >= 1; pre[0] unused
    std::vector<Vec> acts;
};

/// Forward pass starting from activation `a` placed at layer `start`.
Forward forward_from(const DenseNet& net, std::size_t start, const Vec& a);
inline Forward forward(const DenseNet& net, const Vec& x) { return forward_from(net, 0, x); }

struct Gradients {
    std::vector<Mat> dw;
    std::vector<Vec> db;
    Vec d_start;  // gradient w.r.t. the activation at the start layer
};

/// Reverse pass for a forward run that started at layer `start`, given
/// dL/d(last layer activation). Weight gradients are filled only when
/// `weights` is true.
Gradients backward(const DenseNet& net, const Forward& fw, std::size_t start, const Vec& d_out, bool weights = false);

/// mean((out - target)^2) + lambda * ||a_start||^2 and its gradient w.r.t.
/// the activation at layer `start` (0 = the input).
struct LossGrad {
    double loss = 0.0;
    Vec grad;
};
LossGrad mse_grad(const DenseNet& net, std::size_t start, const Vec& a, const Vec& target, double lambda = 0.0);

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(Vec& x, const Vec& g) = 0;
};

class PlainGd final : public Optimizer {
public:
    explicit PlainGd(double lr) : lr_(lr) {}
    void step(Vec& x, const Vec& g) override { x -= lr_ * g; }

private:
    double lr_;
};

class Adam final : public Optimizer {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
    void step(Vec& x, const Vec& g) override;

private:
    double lr_, b1_, b2_, eps_;
    Vec m_, v_;
    std::size_t t_ = 0;
};

/// Full-batch softmax cross-entropy training with Adam. Returns the final
/// training accuracy.
struct TrainOptions {
    std::size_t epochs = 2000;
    double lr = 0.01;
};
double train_classifier(DenseNet& net, const std::vector<Vec>& xs, const std::vector<int>& labels,
                        const TrainOptions& opts = {});

}  // namespace vinf::nn

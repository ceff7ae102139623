#include "vinf/nn.hpp"

#include <cmath>

#include "vinf/error.hpp"

namespace vinf::nn {

namespace {

double act_grad(Activation a, double pre, double post) {
    switch (a) {
        case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return post * (1.0 - post);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

DenseNet DenseNet::from_model(const Model& m) {
    m.validate();
    DenseNet net;
    net.arch = m.arch;
    for (const auto& layer : m.layers) {
        Mat w(layer.rows, layer.cols);
        for (std::size_t i = 0; i < layer.rows; ++i)
            for (std::size_t j = 0; j < layer.cols; ++j) w(i, j) = layer.w(i, j);
        Vec b = Vec::Zero(layer.cols);
        for (std::size_t j = 0; j < layer.bias.size(); ++j) b(j) = layer.bias[j];
        net.w.push_back(std::move(w));
        net.b.push_back(std::move(b));
    }
    return net;
}

Model DenseNet::to_model() const {
    Model m;
    m.arch = arch;
    for (std::size_t l = 0; l < w.size(); ++l) {
        DenseLayer d;
        d.rows = static_cast<std::size_t>(w[l].rows());
        d.cols = static_cast<std::size_t>(w[l].cols());
        d.weights.resize(d.rows * d.cols);
        for (std::size_t i = 0; i < d.rows; ++i)
            for (std::size_t j = 0; j < d.cols; ++j) d.w(i, j) = static_cast<float>(w[l](i, j));
        if (arch.has_bias)
            for (std::size_t j = 0; j < d.cols; ++j) d.bias.push_back(static_cast<float>(b[l](j)));
        m.layers.push_back(std::move(d));
    }
    m.validate();
    return m;
}

Forward forward_from(const DenseNet& net, std::size_t start, const Vec& a) {
    const std::size_t L = net.num_layers();
    if (start > L) throw IndexError("forward start layer out of range");
    if (static_cast<std::size_t>(a.size()) != net.arch.widths[start]) throw ShapeError("forward input has the wrong width");
    Forward f;
    f.pre.resize(L + 1);
    f.acts.resize(L + 1);
    f.acts[start] = a;
    for (std::size_t l = start + 1; l <= L; ++l) {
        f.pre[l] = net.w[l - 1].transpose() * f.acts[l - 1] + net.b[l - 1];
        const Activation act = net.arch.activation(l);
        f.acts[l] = f.pre[l].unaryExpr([act](double x) { return activate(act, x); });
    }
    return f;
}

Gradients backward(const DenseNet& net, const Forward& fw, std::size_t start, const Vec& d_out, bool weights) {
    const std::size_t L = net.num_layers();
    Gradients g;
    if (weights) {
        g.dw.resize(L);
        g.db.resize(L);
    }
    Vec delta = d_out;  // dL/d acts[l]
    for (std::size_t l = L; l > start; --l) {
        const Activation act = net.arch.activation(l);
        Vec dpre(delta.size());
        for (Eigen::Index j = 0; j < delta.size(); ++j) dpre(j) = delta(j) * act_grad(act, fw.pre[l](j), fw.acts[l](j));
        if (weights) {
            g.dw[l - 1] = fw.acts[l - 1] * dpre.transpose();
            g.db[l - 1] = dpre;
        }
        delta = net.w[l - 1] * dpre;
    }
    g.d_start = std::move(delta);
    return g;
}

LossGrad mse_grad(const DenseNet& net, std::size_t start, const Vec& a, const Vec& target, double lambda) {
    auto fw = forward_from(net, start, a);
    const Vec& out = fw.acts.back();
    if (out.size() != target.size()) throw ShapeError("target has the wrong width");
    const Vec diff = out - target;
    const double n = static_cast<double>(diff.size());
    LossGrad r;
    r.loss = diff.squaredNorm() / n + lambda * a.squaredNorm();
    Vec d_out = (2.0 / n) * diff;
    r.grad = backward(net, fw, start, d_out).d_start + 2.0 * lambda * a;
    return r;
}

void Adam::step(Vec& x, const Vec& g) {
    if (m_.size() != x.size()) {
        m_ = Vec::Zero(x.size());
        v_ = Vec::Zero(x.size());
        t_ = 0;
    }
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * g;
    v_ = b2_ * v_ + (1.0 - b2_) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) -= lr_ * (m_(i) / c1) / (std::sqrt(v_(i) / c2) + eps_);
}

double train_classifier(DenseNet& net, const std::vector<Vec>& xs, const std::vector<int>& labels,
                        const TrainOptions& opts) {
    if (xs.empty() || xs.size() != labels.size()) throw ShapeError("training set is empty or mislabeled");
    const std::size_t L = net.num_layers();
    // One Adam state per parameter block, flattened.
    std::vector<Adam> wopt, bopt;
    for (std::size_t l = 0; l < L; ++l) {
        wopt.emplace_back(opts.lr);
        bopt.emplace_back(opts.lr);
    }
    const double n = static_cast<double>(xs.size());
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<Mat> dw(L);
        std::vector<Vec> db(L);
        for (std::size_t l = 0; l < L; ++l) {
            dw[l] = Mat::Zero(net.w[l].rows(), net.w[l].cols());
            db[l] = Vec::Zero(net.b[l].size());
        }
        for (std::size_t s = 0; s < xs.size(); ++s) {
            auto fw = forward(net, xs[s]);
            const Vec& z = fw.acts.back();
            Vec p = (z.array() - z.maxCoeff()).exp();
            p /= p.sum();
            p(labels[s]) -= 1.0;
            auto g = backward(net, fw, 0, p / n, true);
            for (std::size_t l = 0; l < L; ++l) {
                dw[l] += g.dw[l];
                db[l] += g.db[l];
            }
        }
        for (std::size_t l = 0; l < L; ++l) {
            Vec wflat = Eigen::Map<Vec>(net.w[l].data(), net.w[l].size());
            wopt[l].step(wflat, Eigen::Map<Vec>(dw[l].data(), dw[l].size()));
            net.w[l] = Eigen::Map<Mat>(wflat.data(), net.w[l].rows(), net.w[l].cols());
            if (net.arch.has_bias) bopt[l].step(net.b[l], db[l]);
        }
    }
    std::size_t correct = 0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        auto out = forward(net, xs[s]).acts.back();
        Eigen::Index arg;
        out.maxCoeff(&arg);
        correct += arg == labels[s] ? 1 : 0;
    }
    return static_cast<double>(correct) / n;
}

}  // namespace vinf::nn

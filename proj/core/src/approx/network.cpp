#include "kisgmm/approx/network.hpp"

#include <cmath>
#include <cstdio>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/rng.hpp"

namespace kisgmm::approx {

double apply_activation(Activation act, double x) {
    switch (act) {
        case Activation::Linear: return x;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

namespace {

// derivative expressed through the post-activation value y
inline double activation_grad(Activation act, double y) {
    switch (act) {
        case Activation::Linear: return 1.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

}  // namespace

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
    validate_and_size();
    init_params();
}

void Network::validate_and_size() {
    if (spec_.layers.empty()) throw ConfigError("network: no layers");

    LayerShape cur;
    if (std::holds_alternative<ConvSpec>(spec_.layers.front())) {
        const auto& c = std::get<ConvSpec>(spec_.layers.front());
        if (spec_.input_height <= 0 || spec_.input_width <= 0)
            throw ConfigError("network: convolutional input needs input_height/input_width");
        cur = {true, c.in_ch, spec_.input_height, spec_.input_width, 0};
    } else if (std::holds_alternative<DenseSpec>(spec_.layers.front())) {
        cur = {false, 0, 0, 0, std::get<DenseSpec>(spec_.layers.front()).in};
    } else {
        throw ConfigError("network: flatten cannot be the first layer");
    }
    input_size_ = cur.size();
    shapes_.push_back(cur);

    for (size_t i = 0; i < spec_.layers.size(); ++i) {
        const auto& layer = spec_.layers[i];
        if (const auto* d = std::get_if<DenseSpec>(&layer)) {
            if (d->in <= 0 || d->out <= 0) throw ConfigError("network: dense dims must be positive");
            if (cur.spatial)
                throw ConfigError("network: dense after conv requires an explicit flatten");
            if (cur.flat != d->in)
                throw ConfigError("network: layer " + std::to_string(i) + " expects input " +
                                  std::to_string(d->in) + " but previous layer produces " +
                                  std::to_string(cur.flat));
            cur = {false, 0, 0, 0, d->out};
        } else if (const auto* c = std::get_if<ConvSpec>(&layer)) {
            if (c->in_ch <= 0 || c->out_ch <= 0 || c->kernel <= 0 || c->stride <= 0)
                throw ConfigError("network: conv dims must be positive");
            if (!cur.spatial) throw ConfigError("network: conv requires spatial input");
            if (cur.channels != c->in_ch)
                throw ConfigError("network: conv layer " + std::to_string(i) + " expects " +
                                  std::to_string(c->in_ch) + " channels, got " +
                                  std::to_string(cur.channels));
            if (cur.height < c->kernel || cur.width < c->kernel)
                throw ConfigError("network: conv kernel larger than input");
            const int oh = (cur.height - c->kernel) / c->stride + 1;
            const int ow = (cur.width - c->kernel) / c->stride + 1;
            cur = {true, c->out_ch, oh, ow, 0};
        } else {
            if (!cur.spatial) throw ConfigError("network: flatten requires spatial input");
            cur = {false, 0, 0, 0, cur.channels * cur.height * cur.width};
        }
        shapes_.push_back(cur);
    }
    output_size_ = cur.size();
}

void Network::init_params() {
    Rng rng(spec_.seed);
    param_index_.assign(spec_.layers.size(), -1);
    int layer_no = 0;
    for (size_t i = 0; i < spec_.layers.size(); ++i, ++layer_no) {
        if (const auto* d = std::get_if<DenseSpec>(&spec_.layers[i])) {
            const double bound = std::sqrt(6.0 / (d->in + d->out));
            ParamTensor w;
            w.name = "dense" + std::to_string(layer_no) + ".w";
            w.shape = {d->out, d->in};
            w.values.resize(static_cast<size_t>(d->out) * d->in);
            for (auto& v : w.values) v = rng.uniform(-bound, bound);
            w.grad.assign(w.values.size(), 0.0);

            ParamTensor b;
            b.name = "dense" + std::to_string(layer_no) + ".b";
            b.shape = {d->out};
            b.values.assign(d->out, 0.0);
            b.grad.assign(d->out, 0.0);

            param_index_[i] = static_cast<int>(params_.size());
            params_.push_back(std::move(w));
            params_.push_back(std::move(b));
        } else if (const auto* c = std::get_if<ConvSpec>(&spec_.layers[i])) {
            const int fan_in = c->in_ch * c->kernel * c->kernel;
            const int fan_out = c->out_ch * c->kernel * c->kernel;
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            ParamTensor w;
            w.name = "conv" + std::to_string(layer_no) + ".w";
            w.shape = {c->out_ch, c->in_ch, c->kernel, c->kernel};
            w.values.resize(static_cast<size_t>(c->out_ch) * c->in_ch * c->kernel * c->kernel);
            for (auto& v : w.values) v = rng.uniform(-bound, bound);
            w.grad.assign(w.values.size(), 0.0);

            ParamTensor b;
            b.name = "conv" + std::to_string(layer_no) + ".b";
            b.shape = {c->out_ch};
            b.values.assign(c->out_ch, 0.0);
            b.grad.assign(c->out_ch, 0.0);

            param_index_[i] = static_cast<int>(params_.size());
            params_.push_back(std::move(w));
            params_.push_back(std::move(b));
        }
    }
}

std::vector<double> Network::forward(std::span<const double> input, bool record_tape) {
    if (static_cast<int>(input.size()) != input_size_)
        throw ConfigError("network: input size " + std::to_string(input.size()) +
                          " does not match expected " + std::to_string(input_size_));

    if (record_tape) {
        acts_.assign(spec_.layers.size() + 1, {});
        acts_[0].assign(input.begin(), input.end());
    }

    std::vector<double> cur(input.begin(), input.end());
    for (size_t i = 0; i < spec_.layers.size(); ++i) {
        std::vector<double> next;
        if (const auto* d = std::get_if<DenseSpec>(&spec_.layers[i])) {
            const auto& w = params_[param_index_[i]].values;
            const auto& b = params_[param_index_[i] + 1].values;
            next.resize(d->out);
            for (int o = 0; o < d->out; ++o) {
                const double* wr = w.data() + static_cast<size_t>(o) * d->in;
                double acc = b[o];
                for (int k = 0; k < d->in; ++k) acc += wr[k] * cur[k];
                next[o] = apply_activation(d->act, acc);
            }
        } else if (const auto* c = std::get_if<ConvSpec>(&spec_.layers[i])) {
            const auto& in_shape = shapes_[i];
            const auto& out_shape = shapes_[i + 1];
            const auto& w = params_[param_index_[i]].values;
            const auto& b = params_[param_index_[i] + 1].values;
            const int H = in_shape.height, W = in_shape.width;
            const int OH = out_shape.height, OW = out_shape.width;
            const int K = c->kernel, S = c->stride;
            next.assign(static_cast<size_t>(c->out_ch) * OH * OW, 0.0);
            for (int oc = 0; oc < c->out_ch; ++oc) {
                const double* woc = w.data() + static_cast<size_t>(oc) * c->in_ch * K * K;
                double* out_plane = next.data() + static_cast<size_t>(oc) * OH * OW;
                for (int oy = 0; oy < OH; ++oy) {
                    for (int ox = 0; ox < OW; ++ox) {
                        double acc = b[oc];
                        for (int ic = 0; ic < c->in_ch; ++ic) {
                            const double* in_plane = cur.data() + static_cast<size_t>(ic) * H * W;
                            const double* wk = woc + static_cast<size_t>(ic) * K * K;
                            for (int ky = 0; ky < K; ++ky) {
                                const double* row = in_plane + (oy * S + ky) * W + ox * S;
                                const double* wrow = wk + ky * K;
                                for (int kx = 0; kx < K; ++kx) acc += wrow[kx] * row[kx];
                            }
                        }
                        out_plane[oy * OW + ox] = apply_activation(c->act, acc);
                    }
                }
            }
        } else {
            next = cur;  // flatten: bookkeeping only
        }
        cur = std::move(next);
        if (record_tape) acts_[i + 1] = cur;
    }
    has_tape_ = record_tape;
    return cur;
}

std::vector<double> Network::backward(std::span<const double> output_grad) {
    if (!has_tape_) throw StateError("network: backward called without a recorded forward");
    if (static_cast<int>(output_grad.size()) != output_size_)
        throw ConfigError("network: output gradient size mismatch");

    std::vector<double> g(output_grad.begin(), output_grad.end());
    for (int i = static_cast<int>(spec_.layers.size()) - 1; i >= 0; --i) {
        const auto& x = acts_[i];      // layer input
        const auto& y = acts_[i + 1];  // layer output (post-activation)
        std::vector<double> gin;
        if (const auto* d = std::get_if<DenseSpec>(&spec_.layers[i])) {
            auto& wt = params_[param_index_[i]];
            auto& bt = params_[param_index_[i] + 1];
            gin.assign(d->in, 0.0);
            for (int o = 0; o < d->out; ++o) {
                const double gp = g[o] * activation_grad(d->act, y[o]);
                if (gp == 0.0) continue;
                double* gw = wt.grad.data() + static_cast<size_t>(o) * d->in;
                const double* wr = wt.values.data() + static_cast<size_t>(o) * d->in;
                for (int k = 0; k < d->in; ++k) {
                    gw[k] += gp * x[k];
                    gin[k] += gp * wr[k];
                }
                bt.grad[o] += gp;
            }
        } else if (const auto* c = std::get_if<ConvSpec>(&spec_.layers[i])) {
            auto& wt = params_[param_index_[i]];
            auto& bt = params_[param_index_[i] + 1];
            const auto& in_shape = shapes_[i];
            const auto& out_shape = shapes_[i + 1];
            const int H = in_shape.height, W = in_shape.width;
            const int OH = out_shape.height, OW = out_shape.width;
            const int K = c->kernel, S = c->stride;
            gin.assign(x.size(), 0.0);
            for (int oc = 0; oc < c->out_ch; ++oc) {
                const double* g_plane = g.data() + static_cast<size_t>(oc) * OH * OW;
                const double* y_plane = y.data() + static_cast<size_t>(oc) * OH * OW;
                const double* woc = wt.values.data() + static_cast<size_t>(oc) * c->in_ch * K * K;
                double* gwoc = wt.grad.data() + static_cast<size_t>(oc) * c->in_ch * K * K;
                for (int oy = 0; oy < OH; ++oy) {
                    for (int ox = 0; ox < OW; ++ox) {
                        const int oidx = oy * OW + ox;
                        const double gp = g_plane[oidx] * activation_grad(c->act, y_plane[oidx]);
                        if (gp == 0.0) continue;
                        bt.grad[oc] += gp;
                        for (int ic = 0; ic < c->in_ch; ++ic) {
                            const double* in_plane = x.data() + static_cast<size_t>(ic) * H * W;
                            double* gin_plane = gin.data() + static_cast<size_t>(ic) * H * W;
                            const double* wk = woc + static_cast<size_t>(ic) * K * K;
                            double* gwk = gwoc + static_cast<size_t>(ic) * K * K;
                            for (int ky = 0; ky < K; ++ky) {
                                const int iy = oy * S + ky;
                                const double* in_row = in_plane + iy * W + ox * S;
                                double* gin_row = gin_plane + iy * W + ox * S;
                                const double* wrow = wk + ky * K;
                                double* gwrow = gwk + ky * K;
                                for (int kx = 0; kx < K; ++kx) {
                                    gwrow[kx] += gp * in_row[kx];
                                    gin_row[kx] += gp * wrow[kx];
                                }
                            }
                        }
                    }
                }
            }
        } else {
            gin = g;  // flatten
        }
        g = std::move(gin);
    }
    return g;
}

void Network::zero_grad() {
    for (auto& p : params_)
        std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

bool Network::all_finite() const {
    for (const auto& p : params_) {
        for (double v : p.values)
            if (!std::isfinite(v)) return false;
        for (double v : p.grad)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace kisgmm::approx

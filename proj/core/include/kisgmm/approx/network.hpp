#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace kisgmm::approx {

enum class Activation { Linear, Tanh, Sigmoid };

// Dense (fully connected) layer descriptor.
struct DenseSpec {
    int in = 0;
    int out = 0;
    Activation act = Activation::Linear;
};

// 2D convolution, valid padding, square kernel.
struct ConvSpec {
    int in_ch = 0;
    int out_ch = 0;
    int kernel = 3;
    int stride = 1;
    Activation act = Activation::Tanh;
};

struct FlattenSpec {};

using LayerSpec = std::variant<DenseSpec, ConvSpec, FlattenSpec>;

// Network architecture plus the seed its parameters were drawn from.
// input_height/input_width are only consulted when the first layer is a
// convolution; dense-first networks take their input size from the layer.
struct NetworkSpec {
    std::vector<LayerSpec> layers;
    uint64_t seed = 0;
    int input_height = 0;
    int input_width = 0;
};

// Flat parameter block with its gradient. Gradients accumulate across
// backward calls until zero_grad().
struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;

    int size() const { return static_cast<int>(values.size()); }
};

// Feed-forward network with reverse-mode gradients. forward() records the
// per-layer activations needed by backward(). Instances are value types;
// copying snapshots the parameters (used for target networks).
class Network {
public:
    Network() = default;
    explicit Network(NetworkSpec spec);

    // Runs the network. With record_tape=false no state for backward is
    // kept (cheaper; used for target networks and rollout inference).
    std::vector<double> forward(std::span<const double> input, bool record_tape = true);

    // Backpropagates dL/d(output), accumulating into each ParamTensor's
    // grad, and returns dL/d(input). Requires a recorded tape.
    std::vector<double> backward(std::span<const double> output_grad);

    void zero_grad();

    std::vector<ParamTensor>& params() { return params_; }
    const std::vector<ParamTensor>& params() const { return params_; }

    const NetworkSpec& spec() const { return spec_; }
    int input_size() const { return input_size_; }
    int output_size() const { return output_size_; }

    // True when every parameter (and gradient) entry is finite.
    bool all_finite() const;

private:
    struct LayerShape {
        bool spatial = false;
        int channels = 0, height = 0, width = 0;
        int flat = 0;
        int size() const { return spatial ? channels * height * width : flat; }
    };

    void validate_and_size();
    void init_params();

    NetworkSpec spec_;
    std::vector<ParamTensor> params_;     // two per dense/conv layer (W, b)
    std::vector<int> param_index_;        // layer -> index of W in params_ (-1 for flatten)
    std::vector<LayerShape> shapes_;      // shapes_[i] = input shape of layer i; back() = output
    int input_size_ = 0;
    int output_size_ = 0;

    // tape
    bool has_tape_ = false;
    std::vector<std::vector<double>> acts_;  // acts_[i] = input of layer i; acts_[n] = output
};

double apply_activation(Activation act, double x);

}  // namespace kisgmm::approx

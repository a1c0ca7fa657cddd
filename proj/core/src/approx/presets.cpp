#include "kisgmm/approx/presets.hpp"

namespace kisgmm::approx {

namespace {
int conv_out(int size, int kernel, int stride) { return (size - kernel) / stride + 1; }
}  // namespace

NetworkSpec conv_backbone_spec(int channels, int height, int width, uint64_t seed) {
    NetworkSpec spec;
    spec.seed = seed;
    spec.input_height = height;
    spec.input_width = width;
    spec.layers = {
        ConvSpec{channels, 8, 4, 2, Activation::Tanh},
        ConvSpec{8, 16, 3, 2, Activation::Tanh},
        FlattenSpec{},
    };
    return spec;
}

int conv_backbone_output(int height, int width) {
    const int h = conv_out(conv_out(height, 4, 2), 3, 2);
    const int w = conv_out(conv_out(width, 4, 2), 3, 2);
    return 16 * h * w;
}

NetworkSpec mlp_spec(int in, int hidden, int out, uint64_t seed) {
    NetworkSpec spec;
    spec.seed = seed;
    spec.layers = {
        DenseSpec{in, hidden, Activation::Tanh},
        DenseSpec{hidden, hidden, Activation::Tanh},
        DenseSpec{hidden, out, Activation::Linear},
    };
    return spec;
}

}  // namespace kisgmm::approx

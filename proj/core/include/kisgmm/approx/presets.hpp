#pragma once

#include "kisgmm/approx/network.hpp"

namespace kisgmm::approx {

// Shared image trunk for wrist-camera observations: two strided tanh
// convolutions followed by a flatten. The first kernel is 4x4 so that
// every input pixel lands in at least one receptive field.
NetworkSpec conv_backbone_spec(int channels, int height, int width, uint64_t seed);

// Flat feature size produced by conv_backbone_spec.
int conv_backbone_output(int height, int width);

NetworkSpec mlp_spec(int in, int hidden, int out, uint64_t seed);

}  // namespace kisgmm::approx

#pragma once

#include <algorithm>

#include "adaqn/nn/mlp.hpp"

namespace adaqn::nn {

/// Re-homes `old_params` into the layout of `new_spec`.
///
/// Hidden layer l of the new network inherits the overlapping
/// (fan_out x fan_in) block of hidden layer l of the old one; the output layer
/// inherits from the old output layer. Every entry without a counterpart is
/// drawn exactly as mlp_init would draw it.
inline ParamVector weight_transfer(std::span<const double> old_params, const MlpSpec& old_spec,
                                   const MlpSpec& new_spec, Rng& rng) {
    old_spec.validate();
    new_spec.validate();
    detail::check_params(old_params, old_spec);
    if (old_spec.input_dim != new_spec.input_dim || old_spec.output_dim != new_spec.output_dim)
        throw ContractViolation("weight transfer cannot change input or output dimensions");

    ParamVector fresh = mlp_init(new_spec, rng);
    const auto old_layers = old_spec.layers();
    const auto new_layers = new_spec.layers();

    auto copy_block = [&](const LayerShape& from, const LayerShape& to) {
        const std::size_t rows = std::min(from.fan_out, to.fan_out);
        const std::size_t cols = std::min(from.fan_in, to.fan_in);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c)
                fresh[to.offset + r * to.fan_in + c] = old_params[from.offset + r * from.fan_in + c];
            fresh[to.bias_offset() + r] = old_params[from.bias_offset() + r];
        }
    };

    const std::size_t shared_hidden = std::min(old_spec.hidden.size(), new_spec.hidden.size());
    for (std::size_t l = 0; l < shared_hidden; ++l) copy_block(old_layers[l], new_layers[l]);
    copy_block(old_layers.back(), new_layers.back());
    return fresh;
}

}  // namespace adaqn::nn

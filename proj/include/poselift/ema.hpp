#pragma once

#include "poselift/errors.hpp"
#include "poselift/model.hpp"

namespace poselift {

/// Anchor/live pair for the between-phase parameter handoff.
struct EmaPair {
    ParamModel anchor;  // parameters entering the phase
    ParamModel live;    // parameters after the phase's optimization
    double eta = 0.99;
};

/// eta * anchor + (1 - eta) * live, parameter-wise. Computed in anchored
/// form a + (1-eta)(l-a), so eta=1 returns the anchor bitwise, eta=0 the
/// live model bitwise, and anchor==live passes through unchanged.
inline ParamModel ema_update(const EmaPair& pair) {
    if (!pair.anchor.same_descriptor(pair.live))
        throw DescriptorMismatch("ema_update: descriptors differ");
    if (pair.eta == 1.0) return pair.anchor;
    if (pair.eta == 0.0) return pair.live;
    ParamModel out = pair.anchor;
    for (std::size_t p = 0; p < out.params.size(); ++p) {
        const Tensor& a = pair.anchor.params[p].second;
        const Tensor& l = pair.live.params[p].second;
        check_same_shape(a, l, "ema_update");
        Tensor& o = out.params[p].second;
        for (std::size_t i = 0; i < o.data.size(); ++i)
            o.data[i] = a.data[i] + (1.0 - pair.eta) * (l.data[i] - a.data[i]);
    }
    return out;
}

}  // namespace poselift

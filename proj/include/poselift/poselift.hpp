#pragma once

// Umbrella header for the whole library.

#include "poselift/adversarial.hpp"
#include "poselift/autodiff.hpp"
#include "poselift/camera.hpp"
#include "poselift/checkpoint.hpp"
#include "poselift/config.hpp"
#include "poselift/diffusion.hpp"
#include "poselift/domain.hpp"
#include "poselift/ema.hpp"
#include "poselift/errors.hpp"
#include "poselift/estimator.hpp"
#include "poselift/generator.hpp"
#include "poselift/losses.hpp"
#include "poselift/metrics.hpp"
#include "poselift/model.hpp"
#include "poselift/optim.hpp"
#include "poselift/orchestrator.hpp"
#include "poselift/pose.hpp"
#include "poselift/pose_graph.hpp"
#include "poselift/pose_io.hpp"
#include "poselift/rng.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/synth.hpp"
#include "poselift/tensor.hpp"

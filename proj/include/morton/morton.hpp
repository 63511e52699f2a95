#pragma once

// Umbrella header for the whole library.

#include "baselines.hpp"   // IWYU pragma: export
#include "classifier.hpp"  // IWYU pragma: export
#include "core.hpp"        // IWYU pragma: export
#include "eval.hpp"        // IWYU pragma: export
#include "injector.hpp"    // IWYU pragma: export
#include "pipeline.hpp"    // IWYU pragma: export
#include "reputation.hpp"  // IWYU pragma: export
#include "rng.hpp"         // IWYU pragma: export
#include "spectral.hpp"    // IWYU pragma: export

#pragma once

// Umbrella header.

#include "pioneer/autodiff.hpp"
#include "pioneer/core.hpp"
#include "pioneer/curvature.hpp"
#include "pioneer/dataset.hpp"
#include "pioneer/dynamics.hpp"
#include "pioneer/entropy.hpp"
#include "pioneer/geometry.hpp"
#include "pioneer/graph.hpp"
#include "pioneer/learning.hpp"
#include "pioneer/nn.hpp"

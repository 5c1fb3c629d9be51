#pragma once

#include "evd/core.hpp"
#include "evd/correlation_flow.hpp"
#include "evd/event_core.hpp"
#include "evd/integrator.hpp"
#include "evd/io.hpp"
#include "evd/kplane_field.hpp"
#include "evd/losses_metrics.hpp"
#include "evd/pipeline.hpp"
#include "evd/testbed.hpp"
#include "evd/trajectory_field.hpp"
#include "evd/voxelizer.hpp"
#include "evd/warping.hpp"

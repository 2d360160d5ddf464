#pragma once

// Umbrella header for the percolation toolkit.

#include "perc/analysis.hpp"
#include "perc/cloud.hpp"
#include "perc/cloud_io.hpp"
#include "perc/errors.hpp"
#include "perc/generators.hpp"
#include "perc/matrix.hpp"
#include "perc/metric.hpp"
#include "perc/parallel.hpp"
#include "perc/percolation.hpp"
#include "perc/reports.hpp"
#include "perc/rng.hpp"
#include "perc/topo_loss.hpp"

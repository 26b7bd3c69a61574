// Umbrella header: the full pipeline from subset sampling to barycenter
// combination and accuracy diagnostics.
#pragma once

#include "wasp/barycenter.hpp"
#include "wasp/common.hpp"
#include "wasp/diagnostics.hpp"
#include "wasp/functionals.hpp"
#include "wasp/grid.hpp"
#include "wasp/kde.hpp"
#include "wasp/lp.hpp"
#include "wasp/measure.hpp"
#include "wasp/models.hpp"
#include "wasp/orchestrator.hpp"
#include "wasp/partition.hpp"
#include "wasp/rng.hpp"
#include "wasp/transport.hpp"

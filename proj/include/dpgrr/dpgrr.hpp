#ifndef DPGRR_DPGRR_HPP
#define DPGRR_DPGRR_HPP

#include "dpgrr/dataio.hpp"
#include "dpgrr/engine.hpp"
#include "dpgrr/error.hpp"
#include "dpgrr/metrics.hpp"
#include "dpgrr/netgraph.hpp"
#include "dpgrr/objectives.hpp"
#include "dpgrr/proxops.hpp"
#include "dpgrr/reference.hpp"
#include "dpgrr/rng.hpp"
#include "dpgrr/sampling.hpp"

#endif  // DPGRR_DPGRR_HPP

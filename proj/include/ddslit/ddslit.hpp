#pragma once

#include "ddslit/complex_log.hpp"
#include "ddslit/dynamics.hpp"
#include "ddslit/ensemble.hpp"
#include "ddslit/errors.hpp"
#include "ddslit/integrator.hpp"
#include "ddslit/io.hpp"
#include "ddslit/packets.hpp"
#include "ddslit/params.hpp"
#include "ddslit/rng.hpp"
#include "ddslit/sampling.hpp"
#include "ddslit/state.hpp"
#include "ddslit/stats.hpp"

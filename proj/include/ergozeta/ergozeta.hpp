#pragma once

#include "ergozeta/dynamics.hpp"
#include "ergozeta/errors.hpp"
#include "ergozeta/numeric.hpp"
#include "ergozeta/observables.hpp"
#include "ergozeta/parallel.hpp"
#include "ergozeta/rng.hpp"
#include "ergozeta/stats.hpp"
#include "ergozeta/transfer.hpp"
#include "ergozeta/zeta.hpp"

#pragma once

// Umbrella header.

#include "fpa/auction.hpp"
#include "fpa/bounds.hpp"
#include "fpa/distribution.hpp"
#include "fpa/equilibrium.hpp"
#include "fpa/errors.hpp"
#include "fpa/io.hpp"
#include "fpa/numerics.hpp"
#include "fpa/rng.hpp"
#include "fpa/welfare.hpp"

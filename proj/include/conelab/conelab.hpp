#pragma once

#include "conelab/errors.hpp"
#include "conelab/linalg.hpp"
#include "conelab/parallel.hpp"
#include "conelab/spectral_core.hpp"
#include "conelab/band_topology.hpp"
#include "conelab/flavour_mixing.hpp"
#include "conelab/oscillation.hpp"
#include "conelab/dispersion_lab.hpp"
#include "conelab/scenario.hpp"
#include "conelab/version.hpp"

#pragma once

#include "omtopo/config.hpp"
#include "omtopo/csv.hpp"
#include "omtopo/dynamics.hpp"
#include "omtopo/error.hpp"
#include "omtopo/json_io.hpp"
#include "omtopo/manifest.hpp"
#include "omtopo/matrix.hpp"
#include "omtopo/meanfield.hpp"
#include "omtopo/model.hpp"
#include "omtopo/scenario.hpp"
#include "omtopo/spectral.hpp"
#include "omtopo/sweep.hpp"

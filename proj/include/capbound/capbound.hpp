#pragma once

#include "capbound/cdf_curve.hpp"
#include "capbound/config.hpp"
#include "capbound/copula.hpp"
#include "capbound/csv.hpp"
#include "capbound/cumulative_cdf.hpp"
#include "capbound/errors.hpp"
#include "capbound/extremes.hpp"
#include "capbound/map_lundberg.hpp"
#include "capbound/marginal.hpp"
#include "capbound/numeric.hpp"
#include "capbound/simulate.hpp"
#include "capbound/sum_bounds.hpp"
#include "capbound/transforms.hpp"

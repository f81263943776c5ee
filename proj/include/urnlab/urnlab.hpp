#pragma once

#include "urnlab/assumptions.hpp"
#include "urnlab/asymptotics.hpp"
#include "urnlab/common.hpp"
#include "urnlab/finance.hpp"
#include "urnlab/io.hpp"
#include "urnlab/mean_field.hpp"
#include "urnlab/montecarlo.hpp"
#include "urnlab/polya.hpp"
#include "urnlab/rng.hpp"
#include "urnlab/shape.hpp"
#include "urnlab/stats.hpp"
#include "urnlab/urn.hpp"

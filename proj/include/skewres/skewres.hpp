#pragma once

#include "skewres/error.hpp"
#include "skewres/random.hpp"
#include "skewres/format.hpp"
#include "skewres/distributions.hpp"
#include "skewres/triangle.hpp"
#include "skewres/stats.hpp"
#include "skewres/model.hpp"
#include "skewres/mcmc.hpp"
#include "skewres/reserving.hpp"
#include "skewres/evaluate.hpp"
#include "skewres/simulate.hpp"

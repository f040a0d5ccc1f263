#pragma once

#include "qpsde/errors.hpp"
#include "qpsde/stats.hpp"
#include "qpsde/parallel.hpp"
#include "qpsde/noise.hpp"
#include "qpsde/format.hpp"
#include "qpsde/coefficients.hpp"
#include "qpsde/flow.hpp"
#include "qpsde/pullback.hpp"
#include "qpsde/measures.hpp"
#include "qpsde/cylinder.hpp"
#include "qpsde/ou_analytic.hpp"
#include "qpsde/fokker_planck.hpp"
#include "qpsde/config.hpp"
#include "qpsde/io.hpp"
#include "qpsde/acceptance.hpp"

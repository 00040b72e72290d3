#pragma once

#include "spinchain/chain_model.hpp"
#include "spinchain/quadrature.hpp"
#include "spinchain/analytic_spectrum.hpp"
#include "spinchain/exact_propagator.hpp"
#include "spinchain/spectral_propagator.hpp"
#include "spinchain/regime_analysis.hpp"
#include "spinchain/io.hpp"

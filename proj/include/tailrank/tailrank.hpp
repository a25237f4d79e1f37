#pragma once

#include "tailrank/distributions.hpp"
#include "tailrank/error.hpp"
#include "tailrank/estimators.hpp"
#include "tailrank/io.hpp"
#include "tailrank/montecarlo.hpp"
#include "tailrank/rng.hpp"
#include "tailrank/scoring.hpp"
#include "tailrank/tailscore.hpp"

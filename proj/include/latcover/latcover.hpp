#pragma once

#include "latcover/clustering.hpp"
#include "latcover/constants.hpp"
#include "latcover/domain.hpp"
#include "latcover/gff.hpp"
#include "latcover/harmonic.hpp"
#include "latcover/isomorphism.hpp"
#include "latcover/parallel.hpp"
#include "latcover/rng.hpp"
#include "latcover/stats.hpp"
#include "latcover/walk.hpp"

#pragma once

#include "gcmot/analysis.hpp"
#include "gcmot/clustering.hpp"
#include "gcmot/dynamics.hpp"
#include "gcmot/partitions.hpp"
#include "gcmot/rng.hpp"
#include "gcmot/transport.hpp"

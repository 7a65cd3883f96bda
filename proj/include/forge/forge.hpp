#pragma once

// Everything: protocols, adversaries, compression, the reduction, the
// public-coin transform, statistics and the experiment runner.

#include "forge/adversaries.hpp"
#include "forge/cli/runner.hpp"
#include "forge/compression.hpp"
#include "forge/core.hpp"
#include "forge/json_io.hpp"
#include "forge/protocols.hpp"
#include "forge/publiccoin.hpp"
#include "forge/reduction.hpp"
#include "forge/stats.hpp"

#pragma once

// Umbrella header: the whole library in dependency order.

#include "hahn/common.hpp"
#include "hahn/exponents.hpp"
#include "hahn/ffield.hpp"
#include "hahn/lrr.hpp"
#include "hahn/series.hpp"
#include "hahn/twistrec.hpp"
#include "hahn/rootfind.hpp"
#include "hahn/format.hpp"
#include "hahn/cli.hpp"

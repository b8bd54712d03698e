#pragma once

#include "common.hpp"
#include "stats.hpp"
#include "knn.hpp"
#include "entropy.hpp"
#include "dp.hpp"
#include "mi.hpp"
#include "harness.hpp"
#include "io.hpp"

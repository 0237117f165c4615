#pragma once

#include "casestudies.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "grouping.hpp"
#include "hardness.hpp"
#include "policies.hpp"
#include "rng.hpp"

#pragma once

#include "cadforge/geometry.hpp"
#include "cadforge/cadlang.hpp"
#include "cadforge/tokens.hpp"
#include "cadforge/sdf.hpp"
#include "cadforge/kernel.hpp"
#include "cadforge/views.hpp"
#include "cadforge/rewards.hpp"
#include "cadforge/metrics.hpp"
#include "cadforge/datagen.hpp"
#include "cadforge/policy.hpp"
#include "cadforge/expertrl.hpp"

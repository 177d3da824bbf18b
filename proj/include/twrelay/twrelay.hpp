#pragma once

#include "twrelay/capacity.hpp"
#include "twrelay/channel.hpp"
#include "twrelay/harness.hpp"
#include "twrelay/matrix.hpp"
#include "twrelay/rng.hpp"
#include "twrelay/strategies.hpp"

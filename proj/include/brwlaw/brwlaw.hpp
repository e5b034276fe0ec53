#pragma once

#include "brwlaw/errors.hpp"
#include "brwlaw/numerics.hpp"
#include "brwlaw/special_functions.hpp"
#include "brwlaw/moments.hpp"
#include "brwlaw/ode.hpp"
#include "brwlaw/law.hpp"
#include "brwlaw/random.hpp"
#include "brwlaw/simulator.hpp"
#include "brwlaw/batch_io.hpp"
#include "brwlaw/stats.hpp"
#include "brwlaw/verification.hpp"

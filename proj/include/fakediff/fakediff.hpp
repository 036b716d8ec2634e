#pragma once

#include "fakediff/embed.hpp"
#include "fakediff/error.hpp"
#include "fakediff/grid.hpp"
#include "fakediff/laws.hpp"
#include "fakediff/mixture.hpp"
#include "fakediff/normal.hpp"
#include "fakediff/parallel.hpp"
#include "fakediff/pde.hpp"
#include "fakediff/quadrature.hpp"
#include "fakediff/rng.hpp"
#include "fakediff/roots.hpp"
#include "fakediff/simulate.hpp"
#include "fakediff/stats.hpp"
#include "fakediff/timechange.hpp"
#include "fakediff/verify.hpp"

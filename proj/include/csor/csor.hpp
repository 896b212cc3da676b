#pragma once

// Certified step-asynchronous SOR: umbrella header.

#include "csor/edge_list.hpp"
#include "csor/error.hpp"
#include "csor/io.hpp"
#include "csor/kendall.hpp"
#include "csor/norms.hpp"
#include "csor/rankings.hpp"
#include "csor/schedule.hpp"
#include "csor/sor.hpp"
#include "csor/sparse.hpp"
#include "csor/suitable.hpp"

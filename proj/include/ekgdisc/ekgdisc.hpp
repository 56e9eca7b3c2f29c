#pragma once

// Library umbrella. The brute-force oracles (ekgdisc/oracle.hpp) and the
// command-line layer (ekgdisc/cli.hpp) are included separately.

#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"
#include "ekgdisc/extcount.hpp"
#include "ekgdisc/log_math.hpp"
#include "ekgdisc/poset.hpp"
#include "ekgdisc/relations.hpp"
#include "ekgdisc/report.hpp"
#include "ekgdisc/scoring.hpp"
#include "ekgdisc/search.hpp"

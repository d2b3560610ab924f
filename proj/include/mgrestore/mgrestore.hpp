#pragma once

#include "mgrestore/builtin_feeders.hpp"
#include "mgrestore/checkpoint.hpp"
#include "mgrestore/feeder_io.hpp"
#include "mgrestore/oracle.hpp"
#include "mgrestore/trainer.hpp"

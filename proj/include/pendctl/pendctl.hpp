#pragma once

#include "pendctl/common.hpp"
#include "pendctl/plant.hpp"
#include "pendctl/config.hpp"
#include "pendctl/linearization.hpp"
#include "pendctl/synthesis.hpp"
#include "pendctl/simulation.hpp"
#include "pendctl/metrics.hpp"
#include "pendctl/experiment.hpp"
#include "pendctl/io.hpp"

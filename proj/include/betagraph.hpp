#pragma once

#include "betagraph/error.hpp"
#include "betagraph/numeric.hpp"
#include "betagraph/graph_data.hpp"
#include "betagraph/models.hpp"
#include "betagraph/estimator.hpp"
#include "betagraph/fisher.hpp"
#include "betagraph/simulation.hpp"
#include "betagraph/hypothesis.hpp"
#include "betagraph/experiments.hpp"
#include "betagraph/io.hpp"

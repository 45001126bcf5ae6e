#pragma once

#include "spinchain/channel.hpp"
#include "spinchain/dense.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/experiments.hpp"
#include "spinchain/io.hpp"
#include "spinchain/model.hpp"
#include "spinchain/pauli.hpp"
#include "spinchain/random.hpp"
#include "spinchain/series.hpp"
